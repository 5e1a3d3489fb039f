"""Binary field snapshots.

Layout (little-endian): magic "BCNLS1", u32 kind (0 radial-real, 1 periodic-complex),
u32 N or d, u32 m, u32 n per dimension, f64 R or L, f64 time, then the f64
payload in C order; complex values are stored as interleaved (re, im).
"""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np

from .errors import ReportIOError, SnapshotFormatError
from .grid import ComplexField, PeriodicGrid, RadialField, RadialGrid, VectorField

logger = logging.getLogger(__name__)

MAGIC = b"BCNLS1"
KIND_RADIAL = 0
KIND_PERIODIC = 1

HEADER = np.dtype([
    ("magic", "S6"), ("kind", "<u4"), ("dim", "<u4"), ("m", "<u4"), ("n", "<u4"),
    ("extent", "<f8"), ("time", "<f8"),
])


def encode_snapshot(field: VectorField, time: float = 0.0) -> bytes:
    g = field.grid
    header = np.zeros(1, dtype=HEADER)
    header["magic"] = MAGIC
    header["m"] = field.m
    header["time"] = time
    if isinstance(g, RadialGrid):
        if np.iscomplexobj(field.values):
            raise SnapshotFormatError("radial snapshots hold real values")
        header["kind"], header["dim"], header["n"], header["extent"] = KIND_RADIAL, g.N, g.n, g.R
        payload = np.ascontiguousarray(field.values, dtype="<f8")
    else:
        header["kind"], header["dim"], header["n"], header["extent"] = KIND_PERIODIC, g.d, g.n, g.L
        payload = np.ascontiguousarray(field.values, dtype="<c16").view("<f8")
    return header.tobytes() + payload.tobytes()


def decode_snapshot(data: bytes) -> Tuple[VectorField, float]:
    if len(data) < HEADER.itemsize:
        raise SnapshotFormatError(f"snapshot of {len(data)} bytes is shorter than its header")
    header = np.frombuffer(data[:HEADER.itemsize], dtype=HEADER)[0]
    if bytes(header["magic"]) != MAGIC:
        raise SnapshotFormatError(f"bad magic {bytes(header['magic'])!r}")
    kind, dim, m, n = int(header["kind"]), int(header["dim"]), int(header["m"]), int(header["n"])
    extent, time = float(header["extent"]), float(header["time"])
    body = data[HEADER.itemsize:]

    if kind == KIND_RADIAL:
        grid, count = RadialGrid(dim, extent, n), m * n
    elif kind == KIND_PERIODIC:
        grid, count = PeriodicGrid(dim, n, extent), 2 * m * n ** dim
    else:
        raise SnapshotFormatError(f"unknown snapshot kind {kind}")
    if len(body) != 8 * count:
        raise SnapshotFormatError(f"payload holds {len(body)} bytes, expected {8 * count}")

    raw = np.frombuffer(body, dtype="<f8")
    if kind == KIND_RADIAL:
        return RadialField(grid, raw.reshape(m, n)), time
    return ComplexField(grid, raw.view("<c16").reshape((m,) + grid.shape)), time


def write_snapshot(path: Path, field: VectorField, time: float = 0.0) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_snapshot(field, time))
    except OSError as e:
        raise ReportIOError(f"cannot write snapshot {path}: {e}")
    logger.debug(f"💾 Snapshot written to {path}")
    return path


def read_snapshot(path: Path) -> Tuple[VectorField, float]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ReportIOError(f"cannot read snapshot {path}: {e}")
    return decode_snapshot(data)
