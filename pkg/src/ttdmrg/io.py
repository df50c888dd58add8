"""Binary container files for trains and operators.

Both formats are self-describing, little-endian, and laid out as follows.

State train container (magic ``TTR1``)::

    bytes  0..3    magic b"TTR1"
    bytes  4..7    uint32  d, number of sites
    bytes  8..11   int32   gauge tag: center site, or -1 when unknown
    next   4*d     uint32  local dimensions n_0 .. n_{d-1}
    next   4*(d+1) uint32  bond dimensions r_0 .. r_d (r_0 = r_d = 1)
    then, for j = 0..d-1, the core entries as float64 in C (row-major)
    order, r_j * n_j * r_{j+1} values per core, cores concatenated.

Operator container (magic ``MPR1``)::

    bytes  0..3    magic b"MPR1"
    bytes  4..7    uint32  d
    next   4*d     uint32  local dimensions
    next   4*(d+1) uint32  operator bond dimensions (boundaries 1)
    then cores of shape (r_j, n_j, n_j, r_{j+1}) as float64, C order.
"""

from __future__ import annotations

import struct

import numpy as np

from .mpo import MatrixProductOperator
from .tt import TensorTrain

TT_MAGIC = b"TTR1"
MPO_MAGIC = b"MPR1"


def save_tt(train, path):
    with open(path, "wb") as fh:
        fh.write(TT_MAGIC)
        d = train.d
        gauge = -1 if train.center is None else train.center
        fh.write(struct.pack("<Ii", d, gauge))
        fh.write(struct.pack(f"<{d}I", *train.dims))
        fh.write(struct.pack(f"<{d + 1}I", *train.ranks))
        for core in train.cores:
            fh.write(np.ascontiguousarray(core, dtype="<f8").tobytes())


def load_tt(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != TT_MAGIC:
        raise ValueError(f"not a train container: bad magic {data[:4]!r}")
    try:
        d, gauge = struct.unpack_from("<Ii", data, 4)
        off = 12
        dims = struct.unpack_from(f"<{d}I", data, off)
        off += 4 * d
        ranks = struct.unpack_from(f"<{d + 1}I", data, off)
        off += 4 * (d + 1)
        cores = []
        for j in range(d):
            count = ranks[j] * dims[j] * ranks[j + 1]
            core = np.frombuffer(data, dtype="<f8", count=count, offset=off)
            off += 8 * count
            cores.append(core.reshape(ranks[j], dims[j], ranks[j + 1]).astype(float))
    except (struct.error, ValueError) as exc:
        raise ValueError(f"truncated train container: {exc}") from exc
    if off != len(data):
        raise ValueError(f"container has {len(data) - off} trailing bytes")
    return TensorTrain(cores, center=None if gauge < 0 else gauge)


def save_mpo(op, path):
    with open(path, "wb") as fh:
        fh.write(MPO_MAGIC)
        d = op.d
        fh.write(struct.pack("<I", d))
        fh.write(struct.pack(f"<{d}I", *op.dims))
        fh.write(struct.pack(f"<{d + 1}I", *op.ranks))
        for core in op.cores:
            fh.write(np.ascontiguousarray(core, dtype="<f8").tobytes())


def load_mpo(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MPO_MAGIC:
        raise ValueError(f"not an operator container: bad magic {data[:4]!r}")
    try:
        (d,) = struct.unpack_from("<I", data, 4)
        off = 8
        dims = struct.unpack_from(f"<{d}I", data, off)
        off += 4 * d
        ranks = struct.unpack_from(f"<{d + 1}I", data, off)
        off += 4 * (d + 1)
        cores = []
        for j in range(d):
            count = ranks[j] * dims[j] * dims[j] * ranks[j + 1]
            core = np.frombuffer(data, dtype="<f8", count=count, offset=off)
            off += 8 * count
            cores.append(core.reshape(ranks[j], dims[j], dims[j], ranks[j + 1]).astype(float))
    except (struct.error, ValueError) as exc:
        raise ValueError(f"truncated operator container: {exc}") from exc
    if off != len(data):
        raise ValueError(f"container has {len(data) - off} trailing bytes")
    return MatrixProductOperator(cores)
