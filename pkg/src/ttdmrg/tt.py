"""Tensor trains: contraction, gauges, rounding, and separation ranks.

A tensor train represents X(x_0, ..., x_{d-1}) as a product of core slices

    X(x_0, ..., x_{d-1}) = C_0(x_0) C_1(x_1) ... C_{d-1}(x_{d-1})

where core ``j`` is an ndarray of shape ``(rank[j], dims[j], rank[j+1])``
with boundary ranks 1.  Sites are 0-based.  A train is site-orthogonal at
``center`` when every core left of the center is column-orthonormal in its
``(rank*dim, rank)`` unfolding and every core right of it is row-orthonormal
in its ``(rank, dim*rank)`` unfolding; ``center == d-1`` is the
left-orthogonal gauge and ``center == 0`` the right-orthogonal one.

All factorizations use a fixed sign convention (the largest-magnitude entry
of every orthonormal column is nonnegative) so repeated runs are bitwise
reproducible.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .ledger import charge, qr_flops, svd_flops, tensordot_flops

DEFAULT_DENSE_CAP = 1 << 20
DENSE_CAP_ENV = "TTDMRG_DENSE_CAP"

# Relative singular value threshold defining numerical separation ranks.
SEPARATION_RANK_RTOL = 1e-10


def dense_cap(cap=None):
    """Resolve the densification cap: explicit argument, else environment
    variable ``TTDMRG_DENSE_CAP``, else 2**20 entries."""
    if cap is not None:
        return int(cap)
    env = os.environ.get(DENSE_CAP_ENV)
    if env:
        return int(env)
    return DEFAULT_DENSE_CAP


def _check_dense_size(numel, cap):
    cap = dense_cap(cap)
    if numel > cap:
        raise ValueError(
            f"dense tensor with {numel} entries exceeds the cap of {cap}; "
            f"raise it explicitly or via {DENSE_CAP_ENV}"
        )


def qr_fixed(a):
    """Reduced QR with deterministic column signs."""
    q, r = np.linalg.qr(a)
    if q.shape[1]:
        idx = np.argmax(np.abs(q), axis=0)
        s = np.sign(q[idx, np.arange(q.shape[1])])
        s[s == 0] = 1.0
        q = q * s
        r = r * s[:, None]
    return q, r


def lq_fixed(a):
    """Reduced LQ (a = L @ Q, Q row-orthonormal) with deterministic signs."""
    qt, rt = qr_fixed(a.T)
    return rt.T, qt.T


def svd_fixed(a):
    """Thin SVD with deterministic signs on the left factor's columns."""
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if u.shape[1]:
        idx = np.argmax(np.abs(u), axis=0)
        sg = np.sign(u[idx, np.arange(u.shape[1])])
        sg[sg == 0] = 1.0
        u = u * sg
        vt = vt * sg[:, None]
    return u, s, vt


class TensorTrain:
    """Immutable-by-convention list of order-3 cores plus a gauge tag.

    Parameters
    ----------
    cores : sequence of ndarray
        Core ``j`` has shape ``(rank[j], dims[j], rank[j+1])``; the chain of
        bond dimensions must match and the boundary ranks must be 1.
    center : int or None
        Site index the train is site-orthogonal at, or None when the gauge
        is unknown.  Constructing with a center asserts nothing; it is a
        tag maintained by the functions in this module.
    """

    def __init__(self, cores, center=None):
        cores = tuple(np.asarray(c, dtype=float) for c in cores)
        if not cores:
            raise ValueError("need at least one core")
        for j, c in enumerate(cores):
            if c.ndim != 3:
                raise ValueError(f"core {j} must have 3 axes, got {c.ndim}")
            if j and cores[j - 1].shape[2] != c.shape[0]:
                raise ValueError(
                    f"bond mismatch between cores {j - 1} and {j}: "
                    f"{cores[j - 1].shape[2]} vs {c.shape[0]}"
                )
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ValueError("boundary ranks must be 1")
        if center is not None and not 0 <= center < len(cores):
            raise ValueError(f"center {center} out of range for {len(cores)} sites")
        self.cores = cores
        self.center = center

    @property
    def d(self):
        return len(self.cores)

    @property
    def dims(self):
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self):
        return tuple(c.shape[0] for c in self.cores) + (1,)

    @property
    def is_left_orthogonal(self):
        return self.center == self.d - 1

    @property
    def is_right_orthogonal(self):
        return self.center == 0

    def replace_core(self, j, core, center=None):
        cores = list(self.cores)
        cores[j] = core
        return TensorTrain(cores, center=center)

    def to_dense(self, cap=None):
        """Contract all cores into a dense ndarray of shape ``dims``."""
        numel = 1
        for n in self.dims:
            numel *= n
        _check_dense_size(numel, cap)
        t = self.cores[0][0]
        for c in self.cores[1:]:
            t = np.tensordot(t, c, axes=([t.ndim - 1], [0]))
        return np.ascontiguousarray(t[..., 0])

    def norm(self):
        return math.sqrt(max(inner(self, self), 0.0))

    def __repr__(self):
        return f"TensorTrain(dims={self.dims}, ranks={self.ranks}, center={self.center})"


def contract_full(tt, cap=None):
    return tt.to_dense(cap=cap)


def clip_ranks(dims, ranks):
    """Clip requested bond dimensions to what the cuts can support.

    ``ranks`` is an int (uniform bond dimension) or a sequence of the d-1
    interior bonds.  Bonds are clipped so every cut and both neighbor chains
    stay representable: ``rank[j] <= min(prod(dims[:j]), prod(dims[j:]))``
    and ``rank[j+1] <= rank[j]*dims[j]`` in both directions.  Returns the
    full d+1 tuple including the unit boundary bonds.
    """
    dims = tuple(int(n) for n in dims)
    d = len(dims)
    if np.isscalar(ranks):
        interior = [int(ranks)] * (d - 1)
    else:
        interior = [int(r) for r in ranks]
        if len(interior) != d - 1:
            raise ValueError(f"need {d - 1} interior ranks, got {len(interior)}")
    rank = [1] + interior + [1]
    for j in range(1, d):
        left = math.prod(dims[:j])
        right = math.prod(dims[j:])
        rank[j] = max(1, min(rank[j], left, right))
    for j in range(d):
        rank[j + 1] = min(rank[j + 1], rank[j] * dims[j])
    for j in range(d - 1, -1, -1):
        rank[j] = min(rank[j], dims[j] * rank[j + 1])
    return tuple(rank)


def random_tt(dims, ranks, seed=0):
    """Tensor train with i.i.d. standard normal core entries.

    Bond dimensions are clipped with :func:`clip_ranks`.
    """
    dims = tuple(int(n) for n in dims)
    rank = clip_ranks(dims, ranks)
    rng = np.random.default_rng(seed)
    cores = [rng.standard_normal((rank[j], dims[j], rank[j + 1])) for j in range(len(dims))]
    return TensorTrain(cores)


def inner(x, y, ledger=None, op_class="inner"):
    """Euclidean inner product of two trains via transfer contractions."""
    if x.dims != y.dims:
        raise ValueError(f"dimension mismatch: {x.dims} vs {y.dims}")
    e = np.ones((1, 1))
    for cx, cy in zip(x.cores, y.cores):
        t = np.tensordot(e, cx, axes=([0], [0]))
        charge(ledger, op_class, tensordot_flops(e.shape, cx.shape, cx.shape[0]))
        e = np.tensordot(t, cy, axes=([0, 1], [0, 1]))
        charge(ledger, op_class, tensordot_flops(t.shape, cy.shape, cy.shape[0] * cy.shape[1]))
    return float(e[0, 0])


def tt_scale(x, alpha):
    """Scale the train by ``alpha`` (applied to the center core, so a known
    gauge is preserved)."""
    j = x.center if x.center is not None else 0
    return x.replace_core(j, alpha * x.cores[j], center=x.center)


def tt_add(x, y):
    """Structural sum; bond dimensions add at every interior cut."""
    if x.dims != y.dims:
        raise ValueError(f"dimension mismatch: {x.dims} vs {y.dims}")
    d = x.d
    if d == 1:
        return TensorTrain([x.cores[0] + y.cores[0]])
    cores = []
    for j in range(d):
        a, b = x.cores[j], y.cores[j]
        if j == 0:
            cores.append(np.concatenate([a, b], axis=2))
        elif j == d - 1:
            cores.append(np.concatenate([a, b], axis=0))
        else:
            z = np.zeros((a.shape[0] + b.shape[0], a.shape[1], a.shape[2] + b.shape[2]))
            z[: a.shape[0], :, : a.shape[2]] = a
            z[a.shape[0] :, :, a.shape[2] :] = b
            cores.append(z)
    return TensorTrain(cores)


def orthogonalize(tt, center, ledger=None):
    """Return an equivalent train that is site-orthogonal at ``center``.

    A left-to-right QR pass runs up to the center and a right-to-left LQ
    pass runs down to it.  Ranks are never truncated (a QR can only shrink
    a bond that exceeds what its neighbors can carry).  Zero trains pass
    through with zero cores.
    """
    d = tt.d
    if not 0 <= center < d:
        raise ValueError(f"center {center} out of range")
    cores = list(tt.cores)
    for j in range(center):
        r, n, r2 = cores[j].shape
        q, rr = qr_fixed(cores[j].reshape(r * n, r2))
        charge(ledger, "qr", qr_flops(r * n, r2))
        cores[j] = q.reshape(r, n, q.shape[1])
        cores[j + 1] = np.tensordot(rr, cores[j + 1], axes=([1], [0]))
        charge(ledger, "matmul", tensordot_flops(rr.shape, (r2,) + cores[j + 1].shape[1:], r2))
    for j in range(d - 1, center, -1):
        r, n, r2 = cores[j].shape
        l, q = lq_fixed(cores[j].reshape(r, n * r2))
        charge(ledger, "qr", qr_flops(n * r2, r))
        cores[j] = q.reshape(q.shape[0], n, r2)
        cores[j - 1] = np.tensordot(cores[j - 1], l, axes=([2], [0]))
        charge(ledger, "matmul", tensordot_flops(cores[j - 1].shape[:2] + (r,), l.shape, r))
    return TensorTrain(cores, center=center)


def _rank_keep(s, max_rank, tol):
    if s.size == 0:
        return 1
    smax = s[0]
    if smax <= 0.0:
        return 1
    k = int(np.count_nonzero(s > tol * smax)) if tol > 0 else int(np.count_nonzero(s > 0))
    k = min(k, s.size)
    if max_rank is not None:
        k = min(k, int(max_rank))
    return max(k, 1)


def round_tt(tt, max_ranks=None, tol=0.0, ledger=None):
    """Truncate bond dimensions by a sweep of singular value decompositions.

    At every interior cut the kept rank is
    ``min(max_rank, #{sigma_i > tol * sigma_max})``.  The result is
    left-orthogonal, and the total error obeys the usual
    sqrt(d-1) quasi-optimality bound relative to the best truncation at the
    produced ranks.
    """
    d = tt.d
    if max_ranks is None or np.isscalar(max_ranks):
        caps = [max_ranks] * (d - 1)
    else:
        caps = list(max_ranks)
        if len(caps) != d - 1:
            raise ValueError(f"need {d - 1} rank caps, got {len(caps)}")
    x = orthogonalize(tt, 0, ledger=ledger)
    cores = list(x.cores)
    for j in range(d - 1):
        r, n, r2 = cores[j].shape
        u, s, vt = svd_fixed(cores[j].reshape(r * n, r2))
        charge(ledger, "svd", svd_flops(r * n, r2))
        k = _rank_keep(s, caps[j], tol)
        cores[j] = u[:, :k].reshape(r, n, k)
        carry = s[:k, None] * vt[:k]
        cores[j + 1] = np.tensordot(carry, cores[j + 1], axes=([1], [0]))
        charge(ledger, "matmul", tensordot_flops(carry.shape, cores[j + 1].shape, r2))
    return TensorTrain(cores, center=d - 1)


def separation_ranks(x, rtol=SEPARATION_RANK_RTOL):
    """Numerical ranks of the d-1 canonical unfoldings of a dense tensor.

    A singular value counts toward the rank when it exceeds ``rtol`` times
    the largest singular value of its unfolding; the all-zero tensor has
    rank 0 at every cut.
    """
    x = np.asarray(x, dtype=float)
    out = []
    left = 1
    for n in x.shape[:-1]:
        left *= n
        s = np.linalg.svd(x.reshape(left, -1), compute_uv=False)
        smax = s[0] if s.size else 0.0
        out.append(int(np.count_nonzero(s > rtol * smax)) if smax > 0 else 0)
    return tuple(out)


class OrthogonalFamily:
    """All d site-orthogonal configurations of one tensor, sharing cores.

    ``config(i)`` assembles the train ``(L_0, ..., L_{i-1}, C_i, R_{i+1},
    ..., R_{d-1})`` where the ``L`` cores are left-orthonormal, the ``R``
    cores are right-orthonormal, and every configuration contracts to the
    same tensor.
    """

    def __init__(self, left, centers, right):
        self.left = tuple(left)
        self.centers = tuple(centers)
        self.right = tuple(right)
        self.d = len(self.centers)

    @property
    def dims(self):
        return tuple(c.shape[1] for c in self.centers)

    def config(self, i):
        cores = list(self.left[:i]) + [self.centers[i]] + list(self.right[i + 1 :])
        return TensorTrain(cores, center=i)


def orthogonal_family(tt, ledger=None):
    """Build the family of site-orthogonal configurations from a
    left-orthogonal train with one right-to-left LQ sweep."""
    d = tt.d
    if tt.center != d - 1:
        raise ValueError("input must be left-orthogonal (center at the last site)")
    centers = [None] * d
    right = [None] * d
    centers[d - 1] = tt.cores[d - 1]
    for j in range(d - 1, 0, -1):
        r, n, r2 = centers[j].shape
        l, q = lq_fixed(centers[j].reshape(r, n * r2))
        charge(ledger, "qr", qr_flops(n * r2, r))
        if q.shape[0] != r:
            raise ValueError(
                f"rank {r} at cut {j} is not representable from the right; "
                "round or orthogonalize the input first"
            )
        right[j] = q.reshape(r, n, r2)
        centers[j - 1] = np.tensordot(tt.cores[j - 1], l, axes=([2], [0]))
        charge(ledger, "matmul", tensordot_flops(tt.cores[j - 1].shape, l.shape, r))
    return OrthogonalFamily(tt.cores, centers, right)
