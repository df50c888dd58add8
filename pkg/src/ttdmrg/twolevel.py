"""Additive two-level ground-state iteration.

Each global iteration runs four steps:

1. build the orthogonal family of the current iterate (sequential);
2. solve one local eigenproblem per site (one-site) or per neighboring
   pair (two-site), all independent and therefore parallel; each task
   runs on a private cost ledger that is merged back under a logical
   worker tag, so results and recorded flops never depend on scheduling;
3. form the coarse problem over the span of the previous iterate plus
   all locally updated members, and minimize the Rayleigh quotient in
   that span (a whitened dense eigenproblem of size at most d+1, with
   an optional Krylov path whose operator applications use the
   structured sum representations instead of the assembled matrix);
4. compress the coarse minimizer back to the working ranks: the
   one-site sum is an exact train of doubled ranks that is rounded,
   the two-site sum is a chain that is fitted by alternating least
   squares (with a pairwise add-and-round fallback).

The iterate stays left-orthogonal between iterations and the energy is
the Rayleigh quotient of the compressed state, so the recorded energy
sequence reflects what the method actually keeps.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from io import StringIO

import numpy as np

from .dmrg import _solve_1site, _solve_2site, split_and_shift
from .eigen import dense_lowest_eig, dense_sym_svd, lanczos_lowest
from .ledger import CostLedger, tensordot_flops
from .mpo import left_env, mpo_inner, rayleigh_quotient, right_env
from .sums import (
    OneSiteSumFamily,
    TwoSiteChain,
    fit_chain,
    pad_ranks,
    tt_chain_operator_inner,
)
from .tt import inner, orthogonal_family, orthogonalize, round_tt, tt_add, tt_scale


@dataclass
class TwoLevelConfig:
    """Knobs for :func:`run_two_level`.

    ``max_rank`` caps the compressed iterate; two-site local solves are
    also split at this rank before entering the coarse space.
    ``workers`` sets the thread pool width for the parallel steps; it
    must never change the results, only the wall time.
    """

    mode: str = "two-site"
    max_rank: int = 16
    eig_tol: float = 1e-8
    energy_tol: float = 1e-8
    max_iters: int = 200
    eig_max_iter: int | None = None
    coarse_eps: float = 1e-10
    structured_coarse: bool = False
    round_tol: float = 0.0
    fit_tol: float = 1e-8
    max_fit_iters: int = 20
    fallback_compression: bool = False
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("one-site", "two-site"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_rank < 1:
            raise ValueError("max_rank must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        if not 0 < self.coarse_eps < 1:
            raise ValueError("coarse_eps must be in (0, 1)")


@dataclass
class CoarseProblem:
    """Assembled second-level problem over the member span."""

    s_hat: np.ndarray
    a_hat: np.ndarray | None
    sigma: np.ndarray
    basis: np.ndarray
    eps: float
    p: int

    def whitener(self):
        if self.p == 0:
            raise ValueError("coarse span is numerically degenerate (p = 0)")
        return self.basis[:, : self.p] / np.sqrt(self.sigma[: self.p])


@dataclass
class CoarseSolution:
    coeffs: np.ndarray
    energy: float
    iterations: int


@dataclass
class IterationRecord:
    global_iter: int
    energy: float
    energy_error: float
    coarse_p: int
    coarse_iterations: int
    lanczos_iterations: tuple
    coarse_energy: float
    min_update_energy: float
    prev_energy: float
    fit_residual: float
    flops_seq: float
    flops_max_worker: float
    cost_per_processor: float


@dataclass
class TwoLevelTrace:
    records: list = field(default_factory=list)
    converged: bool = False

    def energies(self):
        return [r.energy for r in self.records]

    def to_csv(self):
        buf = StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            [
                "global_iter",
                "energy",
                "energy_error_vs_reference",
                "coarse_p",
                "coarse_iterations",
                "lanczos_iterations",
                "coarse_energy",
                "min_update_energy",
                "prev_energy",
                "fit_residual",
                "flops_seq",
                "flops_max_worker",
                "cost_per_processor",
            ]
        )
        for r in self.records:
            writer.writerow(
                [
                    r.global_iter,
                    repr(r.energy),
                    repr(r.energy_error),
                    r.coarse_p,
                    r.coarse_iterations,
                    ";".join(str(k) for k in r.lanczos_iterations),
                    repr(r.coarse_energy),
                    repr(r.min_update_energy),
                    repr(r.prev_energy),
                    repr(r.fit_residual),
                    repr(r.flops_seq),
                    repr(r.flops_max_worker),
                    repr(r.cost_per_processor),
                ]
            )
        return buf.getvalue()


def _run_tasks(tasks, workers):
    """Run callables, returning results in task order."""
    if workers <= 1:
        return [fn() for fn in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn) for fn in tasks]
        return [f.result() for f in futures]


def local_solves(family, op, mode, eig_tol=1e-8, eig_max_iter=None, max_rank=None,
                 seed=0, workers=1, ledger=None):
    """Step 2: independent local eigensolves over a read-only family.

    Returns ``(updates, results, task ledgers are merged into ledger)``
    where one-site updates are center cores and two-site updates are
    merged pair blocks already truncated to ``max_rank``.
    """
    d = family.d

    def solve_site(i):
        def task():
            led = CostLedger()
            cfg = family.config(i)
            env_l = left_env(cfg, op, cfg, i, led)
            env_r = right_env(cfg, op, cfg, i + 1, led)
            core, res = _solve_1site(
                env_l, op.cores[i], env_r, family.centers[i], eig_tol,
                eig_max_iter, seed, led,
            )
            return core, res, led
        return task

    def solve_pair(i):
        def task():
            led = CostLedger()
            cfg = family.config(i)
            env_l = left_env(cfg, op, cfg, i, led)
            env_r = right_env(cfg, op, cfg, i + 2, led)
            v0 = np.tensordot(family.centers[i], family.right[i + 1], axes=([2], [0]))
            led.charge(
                "matvec",
                tensordot_flops(family.centers[i].shape, family.right[i + 1].shape,
                                family.right[i + 1].shape[0]),
            )
            block, res = _solve_2site(
                env_l, op.cores[i], op.cores[i + 1], env_r, v0, eig_tol,
                eig_max_iter, seed, led,
            )
            left, right, _ = split_and_shift(block, "LR", max_rank, 0.0, led)
            merged = np.tensordot(left, right, axes=([2], [0]))
            led.charge("matvec", tensordot_flops(left.shape, right.shape, right.shape[0]))
            return merged, res, led
        return task

    if mode == "one-site":
        tasks = [solve_site(i) for i in range(d)]
    else:
        tasks = [solve_pair(i) for i in range(d - 1)]
    out = _run_tasks(tasks, workers)
    updates, results = [], []
    for i, (update, res, led) in enumerate(out):
        updates.append(update)
        results.append(res)
        if ledger is not None:
            ledger.merge(led, worker=f"solve:{i}")
    return updates, results


def assemble_coarse(members, op, eps=1e-10, workers=1, ledger=None, with_a=True):
    """Step 3 assembly: overlap and reduced operator matrices over the
    member trains, one task per (i, j) entry with i <= j."""
    m = len(members)
    pairs = [(i, j) for i in range(m) for j in range(i, m)]

    def entry(i, j):
        def task():
            led = CostLedger()
            s = inner(members[i], members[j], led, op_class="coarse")
            a = mpo_inner(members[i], op, members[j], led, op_class="coarse") if with_a else 0.0
            return s, a, led
        return task

    out = _run_tasks([entry(i, j) for i, j in pairs], workers)
    s_hat = np.zeros((m, m))
    a_hat = np.zeros((m, m))
    for (i, j), (s, a, led) in zip(pairs, out):
        s_hat[i, j] = s_hat[j, i] = s
        a_hat[i, j] = a_hat[j, i] = a
        if ledger is not None:
            ledger.merge(led, worker=f"gram{i}.{j}")

    sigma, basis = dense_sym_svd(s_hat, ledger=ledger)
    smax = sigma[0] if len(sigma) else 0.0
    p = int(np.sum(sigma > eps * smax)) if smax > 0 else 0
    return CoarseProblem(s_hat, a_hat if with_a else None, sigma, basis, eps, p)


def solve_coarse(cp, ledger=None):
    """Step 3 solve, direct path: whitened dense eigenproblem."""
    w = cp.whitener()
    h = w.T @ cp.a_hat @ w
    h = 0.5 * (h + h.T)
    lam, vec = dense_lowest_eig(h, ledger=ledger)
    return CoarseSolution(coeffs=w @ vec, energy=float(lam), iterations=0)


def solve_coarse_structured(cp, apply_a, v0=None, tol=1e-12, seed=0, ledger=None):
    """Step 3 solve, Krylov path: same whitened problem, but operator
    applications go through ``apply_a`` (a structured evaluation of the
    reduced operator on a coefficient vector) instead of an assembled
    matrix.  The iteration count is reported for the trace."""
    w = cp.whitener()

    def matvec(y):
        return w.T @ apply_a(w @ y)

    start = None
    if v0 is not None:
        start = np.sqrt(cp.sigma[: cp.p]) * (cp.basis[:, : cp.p].T @ v0)
        if np.linalg.norm(start) == 0.0:
            start = None
    res = lanczos_lowest(matvec, cp.p, v0=start, tol=tol, seed=seed, ledger=ledger)
    return CoarseSolution(
        coeffs=w @ res.eigenvector, energy=float(res.eigenvalue), iterations=res.iterations
    )


def compress_one_site(family, replacements, coeffs, max_rank, round_tol=0.0, ledger=None):
    """Step 4, one-site: exact doubled-rank train, then rounding."""
    total = OneSiteSumFamily(family, replacements, coeffs[1:], prev_coeff=coeffs[0])
    return round_tt(total.materialize(), max_ranks=max_rank, tol=round_tol, ledger=ledger)


def compress_two_site(family, blocks, coeffs, max_rank, fit_tol=1e-8, max_fit_iters=20,
                      seed=0, ledger=None):
    """Step 4, two-site: alternating least squares fit of the chain.

    The fit starts from the member with the largest coefficient
    magnitude (the previous iterate counts as member 0), truncated and
    padded to the target ranks.
    """
    chain = TwoSiteChain(family, blocks, coeffs[1:], prev_coeff=coeffs[0])
    k = int(np.argmax(np.abs(coeffs)))
    if k == 0:
        start = family.config(0)
    else:
        start = chain.member_train(k - 1, ledger)
    capped = round_tt(start, max_ranks=max_rank, ledger=ledger)
    init = pad_ranks(capped, max_rank, seed=seed)
    return fit_chain(chain, init, max_fit_iters=max_fit_iters, fit_tol=fit_tol, ledger=ledger)


def compress_two_site_fallback(members, coeffs, max_rank, round_tol=0.0, ledger=None):
    """Step 4 fallback: scale members, add pairwise, round once."""
    acc = tt_scale(members[0], coeffs[0])
    for member, c in zip(members[1:], coeffs[1:]):
        acc = tt_add(acc, tt_scale(member, c))
    return round_tt(acc, max_ranks=max_rank, tol=round_tol, ledger=ledger)


def run_two_level(init, op, config=None, ledger=None, reference_energy=None):
    """Iterate the two-level method until the energy settles.

    Parameters
    ----------
    init : TensorTrain
        Starting state, any gauge, nonzero, at least two sites.
    op : MatrixProductOperator
        Symmetric operator on the same local spaces.
    config : TwoLevelConfig
    ledger : CostLedger, optional
        Parallel-step work is recorded under per-task worker tags, so
        ``cost_per_processor`` reflects the critical path.
    reference_energy : float, optional
        Fills the trace's energy error column.

    Returns
    -------
    state, trace : TensorTrain, TwoLevelTrace
        The final left-orthogonal iterate and per-iteration records.
    """
    if config is None:
        config = TwoLevelConfig()
    if init.dims != op.dims:
        raise ValueError(f"state dims {init.dims} do not match operator dims {op.dims}")
    d = init.d
    if d < 2:
        raise ValueError("the iteration needs at least two sites")
    if init.norm() == 0.0:
        raise ValueError("initial state has zero norm")

    one_site = config.mode == "one-site"
    state = orthogonalize(init, d - 1, ledger)
    trace = TwoLevelTrace()
    energy = rayleigh_quotient(state, op, ledger)
    prev_coeffs = None

    def flops_snapshot():
        if ledger is None:
            return 0.0, 0.0, 0.0
        return ledger.sequential_flops, ledger.max_worker_flops(), ledger.cost_per_processor()

    for it in range(1, config.max_iters + 1):
        family = orthogonal_family(state, ledger)
        updates, results = local_solves(
            family, op, config.mode, eig_tol=config.eig_tol,
            eig_max_iter=config.eig_max_iter, max_rank=config.max_rank,
            seed=config.seed, workers=config.workers, ledger=ledger,
        )

        if one_site:
            members = [family.config(0)]
            members += [
                family.config(i).replace_core(i, updates[i], center=i) for i in range(d)
            ]
        else:
            chain = TwoSiteChain(family, updates, [1.0] * (d - 1))
            members = [family.config(0)]
            members += [chain.member_train(i, ledger) for i in range(d - 1)]

        cp = assemble_coarse(
            members, op, eps=config.coarse_eps, workers=config.workers, ledger=ledger
        )
        if config.structured_coarse:
            if one_site:
                def apply_a(c):
                    total = OneSiteSumFamily(
                        family, updates, c[1:], prev_coeff=c[0]
                    ).materialize()
                    return np.array(
                        [mpo_inner(mem, op, total, ledger, "coarse") for mem in members]
                    )
            else:
                def apply_a(c):
                    ch = TwoSiteChain(family, updates, c[1:], prev_coeff=c[0])
                    return np.array(
                        [tt_chain_operator_inner(mem, op, ch, ledger, "coarse")
                         for mem in members]
                    )
            sol = solve_coarse_structured(
                cp, apply_a, v0=prev_coeffs, seed=config.seed, ledger=ledger
            )
        else:
            sol = solve_coarse(cp, ledger=ledger)
        prev_coeffs = sol.coeffs

        fit_residual = math.nan
        if one_site:
            state = compress_one_site(
                family, updates, sol.coeffs, config.max_rank, config.round_tol, ledger
            )
        elif config.fallback_compression:
            state = compress_two_site_fallback(
                members, sol.coeffs, config.max_rank, config.round_tol, ledger
            )
        else:
            state, fit_residual = compress_two_site(
                family, updates, sol.coeffs, config.max_rank, config.fit_tol,
                config.max_fit_iters, config.seed + it, ledger,
            )
        if state.norm() == 0.0:
            raise ValueError("compressed iterate vanished; coarse span degenerate")

        prev_energy = energy
        energy = rayleigh_quotient(state, op, ledger)
        seq, maxw, cpp = flops_snapshot()
        trace.records.append(
            IterationRecord(
                global_iter=it,
                energy=float(energy),
                energy_error=(
                    float(abs(energy - reference_energy)) if reference_energy is not None
                    else math.nan
                ),
                coarse_p=cp.p,
                coarse_iterations=sol.iterations,
                lanczos_iterations=tuple(r.iterations for r in results),
                coarse_energy=float(sol.energy),
                # Rayleigh quotients of the span members (matrix diagonals),
                # not the local eigenvalues: two-site updates are split at
                # max_rank before they enter the span, which can cost energy.
                min_update_energy=float(
                    min(cp.a_hat[j, j] / cp.s_hat[j, j] for j in range(1, len(members)))
                ),
                prev_energy=float(prev_energy),
                fit_residual=float(fit_residual),
                flops_seq=seq,
                flops_max_worker=maxw,
                cost_per_processor=cpp,
            )
        )

        denom = max(abs(energy), 1e-12)
        if abs(energy - prev_energy) <= config.energy_tol * denom:
            trace.converged = True
            break

    return state, trace
