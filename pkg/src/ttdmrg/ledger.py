"""Analytic floating-point operation ledger.

Costs are charged from closed-form counts rather than measured, so they are
exactly reproducible across machines and worker pools:

* matrix product (m, k) x (k, n): 2*m*k*n
* thin QR with explicit Q, m >= n:  4*m*n**2
* SVD, m >= n:                      14*m*n**2
* symmetric eigendecomposition:     9*n**3

Charges carry an operation class (see ``OP_CLASSES``) and optionally a worker
tag.  Untagged work is sequential.  The aggregate cost of a run on an
idealized machine with one processor per worker tag is

    cost_per_processor = sequential_flops + max over workers

while ``total_flops`` is the classical single-processor equivalent.
"""

from __future__ import annotations

import json

OP_CLASSES = (
    "env_build",
    "env_update",
    "matvec",
    "qr",
    "svd",
    "inner",
    "coarse",
    "matmul",
)


def matmul_flops(m, k, n):
    return 2.0 * m * k * n


def tensordot_flops(a_shape, b_shape, contracted):
    """Flops of a pairwise tensor contraction.

    ``contracted`` is the product of the contracted dimensions; the
    contraction is counted as one (M, K) x (K, N) matrix product.
    """
    pa = 1
    for s in a_shape:
        pa *= s
    pb = 1
    for s in b_shape:
        pb *= s
    # pa = M*K, pb = K*N  ->  2*M*K*N = 2*pa*pb/K
    return 2.0 * pa * pb / max(contracted, 1)


def qr_flops(m, n):
    if m < n:
        m, n = n, m
    return 4.0 * m * n * n


def svd_flops(m, n):
    if m < n:
        m, n = n, m
    return 14.0 * m * n * n


def eigh_flops(n):
    return 9.0 * n * n * n


class CostLedger:
    """Accumulates analytic flop counts by operation class and worker."""

    def __init__(self):
        self.sequential_flops = 0.0
        self.per_worker_flops = {}
        self.per_class_flops = {}

    def charge(self, op_class, flops, worker=None):
        flops = float(flops)
        if flops < 0:
            raise ValueError("negative flop charge")
        self.per_class_flops[op_class] = self.per_class_flops.get(op_class, 0.0) + flops
        if worker is None:
            self.sequential_flops += flops
        else:
            self.per_worker_flops[worker] = self.per_worker_flops.get(worker, 0.0) + flops

    def worker(self, worker_id):
        return _WorkerView(self, worker_id)

    def merge(self, other, worker=None):
        """Fold a task-local ledger into this one under one worker tag.

        Tasks run on private ledgers so concurrent execution never races;
        the driver merges them in deterministic task order.
        """
        for k, v in other.per_class_flops.items():
            self.per_class_flops[k] = self.per_class_flops.get(k, 0.0) + v
        t = other.total_flops()
        if worker is None:
            self.sequential_flops += t
        else:
            self.per_worker_flops[worker] = self.per_worker_flops.get(worker, 0.0) + t

    def total_flops(self):
        return self.sequential_flops + sum(self.per_worker_flops.values())

    def max_worker_flops(self):
        if not self.per_worker_flops:
            return 0.0
        return max(self.per_worker_flops.values())

    def cost_per_processor(self):
        return self.sequential_flops + self.max_worker_flops()

    def report(self):
        total = self.total_flops()
        cpp = self.cost_per_processor()
        return {
            "sequential_flops": self.sequential_flops,
            "per_worker_flops": dict(sorted(self.per_worker_flops.items())),
            "per_class_flops": dict(sorted(self.per_class_flops.items())),
            "max_worker_flops": self.max_worker_flops(),
            "total_flops": total,
            "cost_per_processor": cpp,
            "speedup_vs_single_processor": total / cpp if cpp > 0 else 1.0,
        }

    def report_json(self):
        return json.dumps(self.report(), indent=2, sort_keys=True)

    def format_report(self):
        r = self.report()
        lines = [
            "flop ledger",
            f"  sequential        {r['sequential_flops']:.6e}",
            f"  max worker        {r['max_worker_flops']:.6e}",
            f"  cost/processor    {r['cost_per_processor']:.6e}",
            f"  total (1 proc)    {r['total_flops']:.6e}",
            f"  speedup           {r['speedup_vs_single_processor']:.3f}",
            "  by class:",
        ]
        for k, v in r["per_class_flops"].items():
            lines.append(f"    {k:<12} {v:.6e}")
        return "\n".join(lines)


class _WorkerView:
    """Charge proxy binding a fixed worker tag."""

    def __init__(self, ledger, worker_id):
        self._ledger = ledger
        self._worker = worker_id

    def charge(self, op_class, flops, worker=None):
        self._ledger.charge(op_class, flops, worker=self._worker)

    def worker(self, worker_id):
        return _WorkerView(self._ledger, worker_id)


def charge(ledger, op_class, flops, worker=None):
    """Charge helper tolerating ``ledger=None``."""
    if ledger is not None:
        ledger.charge(op_class, flops, worker=worker)
