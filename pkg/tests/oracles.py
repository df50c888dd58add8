"""Brute-force reference implementations the tests check the library against.

Everything here is written with plain loops and Kronecker products, not with
the library's contraction routines, so agreement is meaningful.
"""

import numpy as np


def tt_entry(cores, idx):
    m = cores[0][:, idx[0], :]
    for j in range(1, len(cores)):
        m = m @ cores[j][:, idx[j], :]
    return m[0, 0]


def tt_dense(cores):
    dims = tuple(c.shape[1] for c in cores)
    out = np.empty(dims)
    for idx in np.ndindex(*dims):
        out[idx] = tt_entry(cores, idx)
    return out


def mpo_entry(cores, row, col):
    m = cores[0][:, row[0], col[0], :]
    for j in range(1, len(cores)):
        m = m @ cores[j][:, row[j], col[j], :]
    return m[0, 0]


def mpo_dense(cores):
    dims = tuple(c.shape[1] for c in cores)
    size = int(np.prod(dims))
    out = np.empty((size, size))
    for i, row in enumerate(np.ndindex(*dims)):
        for j, col in enumerate(np.ndindex(*dims)):
            out[i, j] = mpo_entry(cores, row, col)
    return out


def chain_entry(blocks, idx):
    """Value of an overlapping two-site chain at one multi-index.

    Block ``l`` has shape (bond, n_l, n_{l+1}, bond); evaluated at the
    index pair ``(idx[l], idx[l+1])`` it is a matrix, and the chain value
    is the product of the d-1 block matrices.
    """
    m = blocks[0][:, idx[0], idx[1], :]
    for l in range(1, len(blocks)):
        m = m @ blocks[l][:, idx[l], idx[l + 1], :]
    return m[0, 0]


def chain_dense(blocks, dims):
    out = np.empty(dims)
    for idx in np.ndindex(*dims):
        out[idx] = chain_entry(blocks, idx)
    return out


def site_projector(cores, i):
    """Dense matrix of the one-site insertion map at site ``i``.

    Columns are indexed by the core slot ``(rank[i], dims[i], rank[i+1])``
    in row-major order; ``P @ vec(core)`` is the dense tensor of the train
    with that core dropped in.
    """
    n = cores[i].shape[1]
    left = np.ones((1, 1))
    for c in cores[:i]:
        left = np.einsum("xa,anb->xnb", left, c).reshape(-1, c.shape[2])
    right = np.ones((1, 1))
    for c in reversed(cores[i + 1 :]):
        right = np.einsum("anb,bx->anx", c, right).reshape(c.shape[0], -1)
    return np.kron(np.kron(left, np.eye(n)), right.T)


def block_projector(cores, i):
    """Dense matrix of the two-site insertion map at sites ``(i, i+1)``."""
    n1 = cores[i].shape[1]
    n2 = cores[i + 1].shape[1]
    left = np.ones((1, 1))
    for c in cores[:i]:
        left = np.einsum("xa,anb->xnb", left, c).reshape(-1, c.shape[2])
    right = np.ones((1, 1))
    for c in reversed(cores[i + 2 :]):
        right = np.einsum("anb,bx->anx", c, right).reshape(c.shape[0], -1)
    return np.kron(np.kron(left, np.eye(n1 * n2)), right.T)


PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
PAULI_Y_REAL = np.array([[0.0, 1.0], [-1.0, 0.0]])  # i * sigma_y


def _embed(op, site, d):
    m = np.ones((1, 1))
    for j in range(d):
        m = np.kron(m, op if j == site else np.eye(2))
    return m


def ising_dense(d, coupling, field):
    """Transverse-field Ising chain, open boundary, built site by site."""
    h = np.zeros((2**d, 2**d))
    for j in range(d - 1):
        h -= coupling * _embed(PAULI_Z, j, d) @ _embed(PAULI_Z, j + 1, d)
    for j in range(d):
        h -= field * _embed(PAULI_X, j, d)
    return h


def heisenberg_dense(d, coupling):
    """Exchange chain J/4 * sum (XX + YY + ZZ), open boundary."""
    h = np.zeros((2**d, 2**d))
    for j in range(d - 1):
        h += coupling / 4.0 * _embed(PAULI_X, j, d) @ _embed(PAULI_X, j + 1, d)
        h -= coupling / 4.0 * _embed(PAULI_Y_REAL, j, d) @ _embed(PAULI_Y_REAL, j + 1, d)
        h += coupling / 4.0 * _embed(PAULI_Z, j, d) @ _embed(PAULI_Z, j + 1, d)
    return h


def unfolding_tail_masses(x, ranks):
    """Frobenius mass dropped when truncating each unfolding of ``x`` to the
    given interior ranks: returns sqrt(sum of discarded sigma^2) per cut."""
    x = np.asarray(x, dtype=float)
    out = []
    left = 1
    for j, n in enumerate(x.shape[:-1]):
        left *= n
        s = np.linalg.svd(x.reshape(left, -1), compute_uv=False)
        out.append(float(np.sqrt(np.sum(s[ranks[j] :] ** 2))))
    return out
