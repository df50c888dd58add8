import numpy as np
import pytest

import oracles
from ttdmrg import mpo, tt
from ttdmrg.ledger import CostLedger
from ttdmrg.mpo import MatrixProductOperator
from ttdmrg.tt import random_tt


def random_mpo(dims, rank, seed):
    rng = np.random.default_rng(seed)
    d = len(dims)
    ranks = [1] + [rank] * (d - 1) + [1]
    cores = [
        rng.standard_normal((ranks[j], dims[j], dims[j], ranks[j + 1])) for j in range(d)
    ]
    return MatrixProductOperator(cores)


def test_to_dense_matches_naive():
    op = random_mpo((2, 3, 2), 2, seed=0)
    assert np.allclose(op.to_dense(), oracles.mpo_dense(op.cores), atol=1e-12)


def test_constructor_validation():
    with pytest.raises(ValueError):
        MatrixProductOperator([np.zeros((1, 2, 3, 1))])
    with pytest.raises(ValueError):
        MatrixProductOperator([np.zeros((2, 2, 2, 1))])
    with pytest.raises(ValueError):
        MatrixProductOperator([np.zeros((1, 2, 2, 2)), np.zeros((3, 2, 2, 1))])


def test_add_transpose_scale_identity():
    a = random_mpo((2, 2, 2), 2, seed=1)
    b = random_mpo((2, 2, 2), 3, seed=2)
    s = mpo.mpo_add(a, mpo.mpo_scale(b, -0.5))
    assert np.allclose(s.to_dense(), a.to_dense() - 0.5 * b.to_dense(), atol=1e-12)
    assert s.ranks[1] == a.ranks[1] + b.ranks[1]
    assert np.allclose(mpo.mpo_transpose(a).to_dense(), a.to_dense().T, atol=1e-12)
    eye = mpo.identity_mpo((2, 3, 2))
    assert np.allclose(eye.to_dense(), np.eye(12), atol=1e-15)


def test_mpo_inner_matches_dense_quadratic_form():
    op = random_mpo((2, 2, 3, 2), 2, seed=3)
    x = random_tt((2, 2, 3, 2), 3, seed=4)
    y = random_tt((2, 2, 3, 2), 2, seed=5)
    want = x.to_dense().ravel() @ op.to_dense() @ y.to_dense().ravel()
    got = mpo.mpo_inner(x, op, y)
    assert abs(got - want) < 1e-10 * (1 + abs(want))


def test_env_updates_match_scratch_builds():
    op = random_mpo((2, 3, 2, 2), 3, seed=6)
    x = random_tt((2, 3, 2, 2), 3, seed=7)
    y = random_tt((2, 3, 2, 2), 2, seed=8)
    lefts = mpo.all_left_envs(x, op, y)
    rights = mpo.all_right_envs(x, op, y)
    for j in range(x.d + 1):
        assert np.allclose(lefts[j], mpo.left_env(x, op, y, j), atol=1e-12)
        assert np.allclose(rights[j], mpo.right_env(x, op, y, j), atol=1e-12)
    # the two halves close to the same scalar at every cut
    full = mpo.mpo_inner(x, op, y)
    for j in range(x.d + 1):
        s = np.einsum("akb,akb->", lefts[j], rights[j])
        assert abs(s - full) < 1e-10 * (1 + abs(full))


@pytest.mark.parametrize("site,center", [(0, 0), (1, 1), (2, 2), (3, 3), (1, None)])
def test_local_1site_matches_dense_projection(site, center):
    dims = (2, 2, 3, 2)
    raw = random_mpo(dims, 2, seed=9)
    op = mpo.mpo_scale(mpo.mpo_add(raw, mpo.mpo_transpose(raw)), 0.5)
    x = random_tt(dims, 3, seed=10)
    if center is not None:
        x = tt.orthogonalize(x, center)
    p = oracles.site_projector(x.cores, site)
    a_eff = p.T @ op.to_dense() @ p
    env_l = mpo.left_env(x, op, x, site)
    env_r = mpo.right_env(x, op, x, site + 1)
    matvec, dim, shape = mpo.local_matvec_1site(env_l, op.cores[site], env_r)
    assert dim == a_eff.shape[0]
    got = np.column_stack([matvec(e) for e in np.eye(dim)])
    assert np.allclose(got, a_eff, atol=1e-10)
    if center == site:
        assert np.max(np.abs(got - got.T)) < 1e-10 * (1 + np.max(np.abs(got)))


@pytest.mark.parametrize("site", [0, 1, 2])
def test_local_2site_matches_dense_projection(site):
    dims = (2, 2, 2, 2)
    op = random_mpo(dims, 2, seed=11)
    x = tt.orthogonalize(random_tt(dims, 2, seed=12), site)
    p = oracles.block_projector(x.cores, site)
    a_eff = p.T @ op.to_dense() @ p
    env_l = mpo.left_env(x, op, x, site)
    env_r = mpo.right_env(x, op, x, site + 2)
    matvec, dim, shape = mpo.local_matvec_2site(
        env_l, op.cores[site], op.cores[site + 1], env_r
    )
    got = np.column_stack([matvec(e) for e in np.eye(dim)])
    assert np.allclose(got, a_eff, atol=1e-10)


def test_rayleigh_quotient_matches_dense():
    op = random_mpo((2, 2, 2), 2, seed=13)
    sym = mpo.mpo_scale(mpo.mpo_add(op, mpo.mpo_transpose(op)), 0.5)
    x = random_tt((2, 2, 2), 2, seed=14)
    v = x.to_dense().ravel()
    want = v @ sym.to_dense() @ v / (v @ v)
    assert abs(mpo.rayleigh_quotient(x, sym) - want) < 1e-10 * (1 + abs(want))


def test_rayleigh_quotient_rejects_zero():
    z = tt.TensorTrain([np.zeros((1, 2, 1))])
    op = mpo.identity_mpo((2,))
    with pytest.raises(ValueError):
        mpo.rayleigh_quotient(z, op)


def test_env_ledger_charges_positive():
    op = random_mpo((2, 2, 2), 2, seed=15)
    x = random_tt((2, 2, 2), 2, seed=16)
    led = CostLedger()
    mpo.all_right_envs(x, op, x, ledger=led)
    mpo.mpo_inner(x, op, x, ledger=led, op_class="inner")
    assert led.per_class_flops["env_build"] > 0
    assert led.per_class_flops["inner"] > 0
    assert led.sequential_flops == led.total_flops()
