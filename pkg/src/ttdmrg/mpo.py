"""Matrix product operators, environments, and projected local operators.

Operator cores have shape ``(orank[j], dims[j], dims[j], orank[j+1])`` with
axis 1 the output (row) index and axis 2 the input (column) index.  An
environment at cut ``j`` is an order-3 array ``(row bond, operator bond,
column bond)``; the trivial boundary environment is ``ones((1, 1, 1))``.

Environments of ``<bra | A | ket>`` contractions are built site by site.
``update_left_env`` / ``update_right_env`` extend an environment by one
site; the ``all_*`` helpers sweep a whole train.  Projected one- and
two-site operators are applied matrix-free through ``apply_local_1site`` /
``apply_local_2site``.
"""

from __future__ import annotations

import numpy as np

from .ledger import charge, tensordot_flops
from .tt import TensorTrain, _check_dense_size


class MatrixProductOperator:
    """Linear operator on a product of local spaces, in train form."""

    def __init__(self, cores):
        cores = tuple(np.asarray(c, dtype=float) for c in cores)
        if not cores:
            raise ValueError("need at least one core")
        for j, c in enumerate(cores):
            if c.ndim != 4:
                raise ValueError(f"operator core {j} must have 4 axes")
            if c.shape[1] != c.shape[2]:
                raise ValueError(f"operator core {j} must act on a square local space")
            if j and cores[j - 1].shape[3] != c.shape[0]:
                raise ValueError(f"operator bond mismatch at cut {j}")
        if cores[0].shape[0] != 1 or cores[-1].shape[3] != 1:
            raise ValueError("boundary operator ranks must be 1")
        self.cores = cores

    @property
    def d(self):
        return len(self.cores)

    @property
    def dims(self):
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self):
        return tuple(c.shape[0] for c in self.cores) + (1,)

    def to_dense(self, cap=None):
        """Dense matrix of shape (prod(dims), prod(dims))."""
        size = 1
        for n in self.dims:
            size *= n
        _check_dense_size(size * size, cap)
        t = np.ones((1, 1, 1))
        for c in self.cores:
            t = np.einsum("abk,kxyl->axbyl", t, c)
            t = t.reshape(t.shape[0] * t.shape[1], t.shape[2] * t.shape[3], t.shape[4])
        return np.ascontiguousarray(t[:, :, 0])

    def __repr__(self):
        return f"MatrixProductOperator(dims={self.dims}, ranks={self.ranks})"


def mpo_to_dense(op, cap=None):
    return op.to_dense(cap=cap)


def mpo_transpose(op):
    return MatrixProductOperator([c.swapaxes(1, 2) for c in op.cores])


def mpo_scale(op, alpha):
    cores = list(op.cores)
    cores[0] = alpha * cores[0]
    return MatrixProductOperator(cores)


def mpo_add(a, b):
    """Operator sum; operator bonds add at every interior cut."""
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")
    d = a.d
    if d == 1:
        return MatrixProductOperator([a.cores[0] + b.cores[0]])
    cores = []
    for j in range(d):
        ca, cb = a.cores[j], b.cores[j]
        if j == 0:
            cores.append(np.concatenate([ca, cb], axis=3))
        elif j == d - 1:
            cores.append(np.concatenate([ca, cb], axis=0))
        else:
            z = np.zeros(
                (ca.shape[0] + cb.shape[0], ca.shape[1], ca.shape[2], ca.shape[3] + cb.shape[3])
            )
            z[: ca.shape[0], :, :, : ca.shape[3]] = ca
            z[ca.shape[0] :, :, :, ca.shape[3] :] = cb
            cores.append(z)
    return MatrixProductOperator(cores)


def identity_mpo(dims):
    return MatrixProductOperator([np.eye(n)[None, :, :, None] for n in dims])


def boundary_env():
    return np.ones((1, 1, 1))


def update_left_env(env, bra_core, op_core, ket_core, ledger=None, op_class="env_update"):
    """Extend a left environment by one site."""
    t = np.tensordot(env, bra_core, axes=([0], [0]))
    charge(ledger, op_class, tensordot_flops(env.shape, bra_core.shape, bra_core.shape[0]))
    u = np.tensordot(t, op_core, axes=([0, 2], [0, 1]))
    charge(
        ledger,
        op_class,
        tensordot_flops(t.shape, op_core.shape, op_core.shape[0] * op_core.shape[1]),
    )
    e = np.tensordot(u, ket_core, axes=([0, 2], [0, 1]))
    charge(
        ledger,
        op_class,
        tensordot_flops(u.shape, ket_core.shape, ket_core.shape[0] * ket_core.shape[1]),
    )
    return e


def update_right_env(env, bra_core, op_core, ket_core, ledger=None, op_class="env_update"):
    """Extend a right environment by one site."""
    t = np.tensordot(bra_core, env, axes=([2], [0]))
    charge(ledger, op_class, tensordot_flops(bra_core.shape, env.shape, env.shape[0]))
    u = np.tensordot(t, op_core, axes=([1, 2], [1, 3]))
    charge(
        ledger,
        op_class,
        tensordot_flops(t.shape, op_core.shape, op_core.shape[1] * op_core.shape[3]),
    )
    e = np.tensordot(u, ket_core, axes=([3, 1], [1, 2]))
    charge(
        ledger,
        op_class,
        tensordot_flops(u.shape, ket_core.shape, ket_core.shape[1] * ket_core.shape[2]),
    )
    return e


def left_env(bra, op, ket, j, ledger=None, op_class="env_build"):
    """Environment of sites ``0..j-1`` built from scratch."""
    e = boundary_env()
    for s in range(j):
        e = update_left_env(e, bra.cores[s], op.cores[s], ket.cores[s], ledger, op_class)
    return e


def right_env(bra, op, ket, j, ledger=None, op_class="env_build"):
    """Environment of sites ``j..d-1`` built from scratch."""
    e = boundary_env()
    for s in range(bra.d - 1, j - 1, -1):
        e = update_right_env(e, bra.cores[s], op.cores[s], ket.cores[s], ledger, op_class)
    return e


def all_left_envs(bra, op, ket, ledger=None, op_class="env_build"):
    """List of d+1 left environments; entry ``j`` covers sites ``< j``."""
    envs = [boundary_env()]
    for s in range(bra.d):
        envs.append(
            update_left_env(envs[-1], bra.cores[s], op.cores[s], ket.cores[s], ledger, op_class)
        )
    return envs


def all_right_envs(bra, op, ket, ledger=None, op_class="env_build"):
    """List of d+1 right environments; entry ``j`` covers sites ``>= j``."""
    envs = [boundary_env()] * (bra.d + 1)
    for s in range(bra.d - 1, -1, -1):
        envs[s] = update_right_env(
            envs[s + 1], bra.cores[s], op.cores[s], ket.cores[s], ledger, op_class
        )
    return envs


def mpo_inner(bra, op, ket, ledger=None, op_class="inner"):
    """Scalar ``<bra | A | ket>`` via one left-to-right pass."""
    e = left_env(bra, op, ket, bra.d, ledger=ledger, op_class=op_class)
    return float(e[0, 0, 0])


def rayleigh_quotient(x, op, ledger=None, op_class="inner"):
    from .tt import inner as tt_inner

    num = mpo_inner(x, op, x, ledger=ledger, op_class=op_class)
    den = tt_inner(x, x, ledger=ledger, op_class=op_class)
    if den <= 0.0:
        raise ValueError("Rayleigh quotient of a zero train")
    return num / den


def apply_local_1site(env_left, op_core, env_right, v, ledger=None, op_class="matvec"):
    """Apply the projected operator at one site to a core-shaped array."""
    t = np.tensordot(env_left, v, axes=([2], [0]))
    charge(ledger, op_class, tensordot_flops(env_left.shape, v.shape, v.shape[0]))
    u = np.tensordot(t, op_core, axes=([1, 2], [0, 2]))
    charge(
        ledger,
        op_class,
        tensordot_flops(t.shape, op_core.shape, op_core.shape[0] * op_core.shape[2]),
    )
    w = np.tensordot(u, env_right, axes=([1, 3], [2, 1]))
    charge(
        ledger,
        op_class,
        tensordot_flops(u.shape, env_right.shape, env_right.shape[1] * env_right.shape[2]),
    )
    return w


def apply_local_2site(env_left, op_core1, op_core2, env_right, v, ledger=None, op_class="matvec"):
    """Apply the projected operator on a pair of adjacent sites to a block
    of shape ``(rank, n1, n2, rank')``."""
    t = np.tensordot(env_left, v, axes=([2], [0]))
    charge(ledger, op_class, tensordot_flops(env_left.shape, v.shape, v.shape[0]))
    t = np.tensordot(t, op_core1, axes=([1, 2], [0, 2]))
    charge(
        ledger,
        op_class,
        tensordot_flops(t.shape, op_core1.shape, op_core1.shape[0] * op_core1.shape[2]),
    )
    t = np.tensordot(t, op_core2, axes=([4, 1], [0, 2]))
    charge(
        ledger,
        op_class,
        tensordot_flops(t.shape, op_core2.shape, op_core2.shape[0] * op_core2.shape[2]),
    )
    w = np.tensordot(t, env_right, axes=([1, 4], [2, 1]))
    charge(
        ledger,
        op_class,
        tensordot_flops(t.shape, env_right.shape, env_right.shape[1] * env_right.shape[2]),
    )
    return w


def local_matvec_1site(env_left, op_core, env_right, ledger=None, op_class="matvec"):
    """Flat matvec closure over the projected one-site operator, plus its
    dimension and the core shape."""
    shape = (env_left.shape[2], op_core.shape[2], env_right.shape[2])
    dim = shape[0] * shape[1] * shape[2]

    def matvec(x):
        v = x.reshape(shape)
        return apply_local_1site(env_left, op_core, env_right, v, ledger, op_class).ravel()

    return matvec, dim, shape


def local_matvec_2site(env_left, op_core1, op_core2, env_right, ledger=None, op_class="matvec"):
    shape = (env_left.shape[2], op_core1.shape[2], op_core2.shape[2], env_right.shape[2])
    dim = shape[0] * shape[1] * shape[2] * shape[3]

    def matvec(x):
        v = x.reshape(shape)
        return apply_local_2site(
            env_left, op_core1, op_core2, env_right, v, ledger, op_class
        ).ravel()

    return matvec, dim, shape
