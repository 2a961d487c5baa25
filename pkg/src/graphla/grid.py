"""Grid containers, normalization and on-disk grid formats.

Grids are stored time-major: rows are time samples, columns are traces.

Two file formats are understood. The binary one is::

    b"GRD1" | rows: uint64 LE | cols: uint64 LE | rows*cols float64 LE, row-major

and a headerless CSV (comma separated values, one grid row per line) that is
handy for small fixtures. ``load_grid`` sniffs the magic bytes to decide.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, IoFailure, MalformedHeader, ZeroVariance

MAGIC = b"GRD1"
_HEADER = struct.Struct("<4sQQ")


def _as_finite_matrix(values, name):
    arr = np.array(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ImpedanceGrid:
    """Impedance field of shape ``(n_t, n_x)``; the unknown of the inversion."""

    values: np.ndarray

    def __post_init__(self):
        arr = _as_finite_matrix(self.values, "ImpedanceGrid")
        if arr.shape[0] < 2:
            raise DimensionMismatch("ImpedanceGrid needs at least 2 time samples")
        object.__setattr__(self, "values", arr)

    @property
    def n_t(self) -> int:
        return self.values.shape[0]

    @property
    def n_x(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class SeismicGrid:
    """Observed (possibly time-decimated) seismic section of shape ``(m_t, n_x)``."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_finite_matrix(self.values, "SeismicGrid"))

    @property
    def m_t(self) -> int:
        return self.values.shape[0]

    @property
    def n_x(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def check_against(self, op) -> None:
        """Raise DimensionMismatch unless ``op`` produces grids of this shape."""
        if self.m_t != op.m_t:
            raise DimensionMismatch(
                f"seismic has {self.m_t} rows but operator produces {op.m_t}"
            )

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class NoiseModel:
    delta: float
    target_psnr: float | None = field(default=None)

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("delta must be nonnegative")
        if self.target_psnr is not None and not np.isfinite(self.target_psnr):
            raise ValueError("target_psnr must be finite")


def normalize(grid):
    """Shift and scale ``grid`` to zero mean and unit (population) std.

    Returns:
        tuple: ``(normalized, mean, std)`` with ``grid == normalized * std + mean``.
    """
    arr = np.asarray(grid, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std())
    if std == 0.0 or not np.isfinite(std):
        raise ZeroVariance("cannot normalize a constant grid")
    out = (arr - mean) / std
    return out, mean, std


def digest(grid) -> str:
    """Short content hash of a grid (shape + bytes)."""
    arr = np.ascontiguousarray(np.asarray(grid, dtype="<f8"))
    h = hashlib.sha256()
    h.update(str(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()[:16]


def save_grid(grid, path) -> None:
    arr = np.ascontiguousarray(np.asarray(grid, dtype="<f8"))
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"grid must be 2D, got shape {arr.shape}")
    path = Path(path)
    try:
        if path.suffix.lower() == ".csv":
            with open(path, "w") as fh:
                for row in arr:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")
        else:
            with open(path, "wb") as fh:
                fh.write(_HEADER.pack(MAGIC, arr.shape[0], arr.shape[1]))
                fh.write(arr.tobytes())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_grid(path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if raw[:4] == MAGIC:
        return _parse_binary(raw)
    if len(raw) < _HEADER.size and MAGIC.startswith(raw[:4]) and raw:
        raise MalformedHeader("truncated binary grid header")
    return _parse_csv(raw)


def _parse_binary(raw):
    if len(raw) < _HEADER.size:
        raise MalformedHeader("truncated binary grid header")
    _, rows, cols = _HEADER.unpack_from(raw)
    payload = len(raw) - _HEADER.size
    if payload != rows * cols * 8:
        raise MalformedHeader(
            f"header says {rows}x{cols} but payload holds {payload} bytes"
        )
    arr = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    return arr.astype(np.float64)


def _parse_csv(raw):
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MalformedHeader("file is neither a GRD1 grid nor ASCII CSV") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise MalformedHeader(f"bad CSV value on line {lineno}") from exc
    if not rows:
        raise MalformedHeader("empty grid file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DimensionMismatch("CSV rows have differing lengths")
    return np.array(rows, dtype=np.float64)
