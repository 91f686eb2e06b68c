"""GFLM grid snapshots: b"GFLM", then version, n1, n2 as little-endian u32, then n1*n2 float64 row-major."""

import logging
import struct
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

from models.errors import GflameError
from models.grid import Grid2

logger = logging.getLogger(__name__)

MAGIC = b"GFLM"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_snapshot(path: str, grid: Grid2) -> Path:
    """Write a grid as a GFLM file, creating parent directories."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("wb") as handle:
        handle.write(_HEADER.pack(MAGIC, VERSION, grid.n1, grid.n2))
        handle.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())
    logger.info(f"Wrote {grid.n1}x{grid.n2} snapshot to {target}")
    return target


def read_snapshot(path: str) -> Grid2:
    """Read a GFLM file back into a Grid2.

    Raises:
        GflameError: If the magic bytes, version or payload size do not match.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise GflameError(f"{path}: truncated GFLM header", "snapshot")
    magic, version, n1, n2 = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise GflameError(f"{path}: not a GFLM file", "snapshot")
    if version != VERSION:
        raise GflameError(f"{path}: unsupported GFLM version {version}", "snapshot")
    payload = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if payload.size != n1 * n2:
        raise GflameError(f"{path}: expected {n1 * n2} values, found {payload.size}", "snapshot")
    return Grid2(payload.reshape(n1, n2).astype(float))


def write_value_snapshot(path: str, base: Grid2, p: Tuple[float, float], k: int) -> Path:
    """Game values: the periodic part as GFLM plus a sidecar CSV holding p and k."""
    target = write_snapshot(path, base)
    pd.DataFrame([{"p1": p[0], "p2": p[1], "k": k}]).to_csv(
        target.with_suffix(target.suffix + ".p.csv"), index=False
    )
    return target
