import numpy as np
import pytest

from ttdmrg.eigen import dense_lowest_eig, dense_sym_svd, lanczos_lowest


def random_sym(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim))
    return (a + a.T) / 2


def test_lanczos_matches_dense_eigh():
    a = random_sym(60, 0)
    w, v = np.linalg.eigh(a)
    res = lanczos_lowest(lambda x: a @ x, 60, tol=1e-10, seed=1)
    assert res.converged
    assert abs(res.eigenvalue - w[0]) < 1e-8 * max(1, abs(w[0]))
    overlap = abs(res.eigenvector @ v[:, 0])
    assert overlap > 1 - 1e-8
    assert res.iterations <= 60


def test_lanczos_residual_is_recomputed():
    a = random_sym(40, 2)
    res = lanczos_lowest(lambda x: a @ x, 40, tol=1e-8, seed=3)
    true_res = np.linalg.norm(a @ res.eigenvector - res.eigenvalue * res.eigenvector)
    assert abs(res.residual_norm - true_res) < 1e-10
    assert abs(np.linalg.norm(res.eigenvector) - 1) < 1e-12


def test_lanczos_warm_start_monotone():
    a = random_sym(30, 4)
    rng = np.random.default_rng(5)
    for _ in range(5):
        v0 = rng.standard_normal(30)
        rq = v0 @ a @ v0 / (v0 @ v0)
        res = lanczos_lowest(lambda x: a @ x, 30, v0=v0, tol=1e-6, seed=6)
        assert res.eigenvalue <= rq + 1e-10


def test_lanczos_exact_start_converges_immediately():
    a = random_sym(25, 7)
    w, v = np.linalg.eigh(a)
    res = lanczos_lowest(lambda x: a @ x, 25, v0=v[:, 0], tol=1e-8, seed=8)
    assert res.converged
    assert res.iterations == 1
    assert abs(res.eigenvalue - w[0]) < 1e-10


def test_lanczos_exact_invariant_start_is_accepted():
    # an exact excited eigenvector spans an invariant subspace; its Ritz
    # pair has residual zero and is returned as converged
    a = np.diag([1.0, 3.0])
    res = lanczos_lowest(lambda x: a @ x, 2, v0=np.array([0.0, 1.0]), tol=1e-15, seed=9)
    assert res.converged and res.eigenvalue == 3.0


def test_lanczos_breakdown_restart_finds_lower_state():
    # a nearly invariant start makes the basis expansion collapse (beta in
    # the breakdown window) while the residual still misses the tolerance,
    # forcing a random restart that then finds the ground state
    a = np.diag([1.0, 3.0])
    v0 = np.array([3e-14, 1.0])
    res = lanczos_lowest(lambda x: a @ x, 2, v0=v0, tol=1e-14, max_iter=10, seed=9)
    assert abs(res.eigenvalue - 1.0) < 1e-12


def test_lanczos_max_iter_flag():
    a = random_sym(50, 10)
    res = lanczos_lowest(lambda x: a @ x, 50, tol=1e-14, max_iter=3, seed=11)
    assert not res.converged
    assert res.iterations == 3
    w = np.linalg.eigh(a)[0]
    assert res.eigenvalue >= w[0] - 1e-10


def test_lanczos_deterministic():
    a = random_sym(20, 12)
    r1 = lanczos_lowest(lambda x: a @ x, 20, tol=1e-9, seed=13)
    r2 = lanczos_lowest(lambda x: a @ x, 20, tol=1e-9, seed=13)
    assert r1.eigenvalue == r2.eigenvalue
    assert np.array_equal(r1.eigenvector, r2.eigenvector)


def test_lanczos_dim_one_and_validation():
    res = lanczos_lowest(lambda x: 4.5 * x, 1, tol=1e-10)
    assert res.converged and res.eigenvalue == 4.5
    with pytest.raises(ValueError):
        lanczos_lowest(lambda x: x, 0)
    with pytest.raises(ValueError):
        lanczos_lowest(lambda x: x, 3, v0=np.ones(4))


def test_lanczos_degenerate_lowest():
    a = np.diag([2.0, 2.0, 5.0, 7.0])
    res = lanczos_lowest(lambda x: a @ x, 4, tol=1e-10, seed=14)
    assert abs(res.eigenvalue - 2.0) < 1e-9


def test_dense_lowest_eig():
    a = random_sym(12, 15)
    w, v = np.linalg.eigh(a)
    lam, vec = dense_lowest_eig(a)
    assert abs(lam - w[0]) < 1e-12
    assert abs(abs(vec @ v[:, 0]) - 1) < 1e-10
    assert vec[np.argmax(np.abs(vec))] > 0
    with pytest.raises(ValueError):
        dense_lowest_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_dense_sym_svd_orders_and_reconstructs():
    g = random_sym(8, 16)
    g = g @ g.T  # positive semidefinite
    sigma, v = dense_sym_svd(g)
    assert np.all(np.diff(sigma) <= 1e-12)
    assert np.allclose(v @ np.diag(sigma) @ v.T, g, atol=1e-10)
    assert np.allclose(v.T @ v, np.eye(8), atol=1e-12)
    with pytest.raises(ValueError):
        dense_sym_svd(np.array([[0.0, 1.0], [0.5, 0.0]]))
