"""
Precision levels and the conversion / accumulation kernels behind the
four-precision refinement scheme u_f >= u_s >= u >= u_r.

Exports:
  PrecisionLevel, PrecisionConfig  : the precision lattice and a solver's choice in it
  demote_vector / promote_vector   : overflow-safe binary64 <-> binary32 conversion
  demote_matrix / promote_matrix   : same, one scale per matrix
  demote_parts / promote_parts     : joint scaling of a block vector
  two_sum / two_prod               : error-free transformations (vectorised)
  extended_dot / extended_gemv     : double-double accumulation, rounded once

Extended precision is never stored: it only exists inside extended_dot and
extended_gemv, which return binary64 results.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from errors import DimensionError, InvalidInput


# ---------------------------------------------------------------------------
# Precision lattice
# ---------------------------------------------------------------------------

class PrecisionLevel(Enum):
    LOW = "low"
    WORKING = "working"
    EXTENDED = "extended"

    @property
    def unit_roundoff(self) -> float:
        return _UNIT_ROUNDOFF[self]

    @property
    def dtype(self) -> type:
        """Storage dtype. Extended values are stored at binary64."""
        return np.float32 if self is PrecisionLevel.LOW else np.float64

    @classmethod
    def parse(cls, name: str | PrecisionLevel) -> PrecisionLevel:
        if isinstance(name, PrecisionLevel):
            return name
        key = name.strip().lower()
        if key in _ALIASES:
            return _ALIASES[key]
        raise InvalidInput(f"unknown precision level {name!r}")


_UNIT_ROUNDOFF = {
    PrecisionLevel.LOW: 2.0**-24,
    PrecisionLevel.WORKING: 2.0**-53,
    PrecisionLevel.EXTENDED: 2.0**-106,
}

_ALIASES = {
    "low": PrecisionLevel.LOW,
    "single": PrecisionLevel.LOW,
    "float32": PrecisionLevel.LOW,
    "working": PrecisionLevel.WORKING,
    "double": PrecisionLevel.WORKING,
    "float64": PrecisionLevel.WORKING,
    "extended": PrecisionLevel.EXTENDED,
    "double-double": PrecisionLevel.EXTENDED,
    "quad": PrecisionLevel.EXTENDED,
}


@dataclass(frozen=True)
class PrecisionConfig:
    """(u_f, u_s, u, u_r); defaults to (single, single, double, double)."""

    factor: PrecisionLevel = PrecisionLevel.LOW
    solve: PrecisionLevel = PrecisionLevel.LOW
    working: PrecisionLevel = PrecisionLevel.WORKING
    residual: PrecisionLevel = PrecisionLevel.WORKING

    def __post_init__(self):
        if self.working is not PrecisionLevel.WORKING:
            raise InvalidInput("working precision must be binary64")
        chain = [self.factor, self.solve, self.working, self.residual]
        roundoffs = [lvl.unit_roundoff for lvl in chain]
        if any(a < b for a, b in zip(roundoffs, roundoffs[1:])):
            names = "/".join(lvl.value for lvl in chain)
            raise InvalidInput(f"precisions must satisfy u_f >= u_s >= u >= u_r, got {names}")

    @classmethod
    def from_names(cls, factor: str, solve: str, working: str, residual: str) -> PrecisionConfig:
        return cls(
            factor=PrecisionLevel.parse(factor),
            solve=PrecisionLevel.parse(solve),
            working=PrecisionLevel.parse(working),
            residual=PrecisionLevel.parse(residual),
        )


# ---------------------------------------------------------------------------
# Demotion / promotion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledLowVector:
    """binary32 data with the binary64 factor divided out before demotion."""

    data: np.ndarray
    scale: float


@dataclass(frozen=True)
class ScaledLowMatrix:
    data: np.ndarray
    scale: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def _max_abs_scale(values: np.ndarray) -> float:
    if not np.all(np.isfinite(values)):
        raise InvalidInput("cannot demote non-finite values")
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return scale if scale > 0.0 else 1.0


def demote_vector(v) -> ScaledLowVector:
    """Scale by the max-abs entry, then round to binary32.

    Entries smaller than about 1e-38 times the largest one land in the
    binary32 subnormal range and lose relative accuracy.
    """
    v = np.asarray(v, dtype=np.float64)
    scale = _max_abs_scale(v)
    return ScaledLowVector(data=(v / scale).astype(np.float32), scale=scale)


def promote_vector(w: ScaledLowVector) -> np.ndarray:
    return w.scale * w.data.astype(np.float64)


def demote_matrix(a) -> ScaledLowMatrix:
    a = np.asarray(a, dtype=np.float64)
    scale = _max_abs_scale(a)
    return ScaledLowMatrix(data=(a / scale).astype(np.float32), scale=scale)


def promote_matrix(w: ScaledLowMatrix) -> np.ndarray:
    return w.scale * w.data.astype(np.float64)


def demote_parts(parts: Sequence[np.ndarray], level: PrecisionLevel) -> tuple[list[np.ndarray], float]:
    """Bring a block vector to `level` with one scale shared by all blocks.

    A single scale keeps any linear solve on the blocks linear: the caller
    solves on the scaled blocks and multiplies the answer by the scale.
    """
    parts = [np.asarray(p, dtype=np.float64) for p in parts]
    if level is not PrecisionLevel.LOW:
        return [p.copy() for p in parts], 1.0
    joint = demote_vector(np.concatenate(parts) if parts else np.zeros(0))
    out, start = [], 0
    for p in parts:
        out.append(joint.data[start:start + p.size])
        start += p.size
    return out, joint.scale


def promote_parts(parts: Sequence[np.ndarray], scale: float) -> list[np.ndarray]:
    return [scale * np.asarray(p, dtype=np.float64) for p in parts]


# ---------------------------------------------------------------------------
# Error-free transformations
# ---------------------------------------------------------------------------

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b) -> tuple[np.ndarray, np.ndarray]:
    """s + e == a + b exactly, with s = fl(a + b)."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b) -> tuple[np.ndarray, np.ndarray]:
    """p + e == a * b exactly, with p = fl(a * b) (Dekker, no FMA).

    Valid while |a|, |b| stay below ~1e300 so the splitting cannot overflow.
    """
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _dd_reduce(hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
    """Pairwise double-double summation along the last axis."""
    if hi.shape[-1] == 0:
        return np.zeros(hi.shape[:-1])
    while hi.shape[-1] > 1:
        if hi.shape[-1] % 2:
            pad = [(0, 0)] * (hi.ndim - 1) + [(0, 1)]
            hi = np.pad(hi, pad)
            lo = np.pad(lo, pad)
        s, e = two_sum(hi[..., 0::2], hi[..., 1::2])
        lo = lo[..., 0::2] + lo[..., 1::2] + e
        hi = s
    return hi[..., 0] + lo[..., 0]


def extended_dot(x, y) -> float:
    """Dot product accumulated in double-double, rounded to binary64 once."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"dot of shapes {x.shape} and {y.shape}")
    p, e = two_prod(x, y)
    return float(_dd_reduce(p, e))


def extended_gemv(
    blocks: Sequence[tuple[np.ndarray, np.ndarray]],
    offsets: Sequence[np.ndarray] = (),
) -> np.ndarray:
    """sum_k A_k x_k + sum_j offsets_j accumulated in double-double.

    Offsets enter the accumulation exactly, so a residual such as
    b - r - A x is rounded a single time at the end.
    """
    rows = None
    hi_cols, lo_cols = [], []
    for a, x in blocks:
        a = np.asarray(a, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        if a.ndim != 2 or x.ndim != 1 or a.shape[1] != x.shape[0]:
            raise DimensionError(f"matvec of shapes {a.shape} and {x.shape}")
        if rows is None:
            rows = a.shape[0]
        elif a.shape[0] != rows:
            raise DimensionError(f"block row counts differ: {rows} vs {a.shape[0]}")
        p, e = two_prod(a, x[np.newaxis, :])
        hi_cols.append(p)
        lo_cols.append(e)
    for off in offsets:
        off = np.asarray(off, dtype=np.float64)
        if rows is None:
            rows = off.shape[0]
        if off.shape != (rows,):
            raise DimensionError(f"offset of shape {off.shape}, expected ({rows},)")
        hi_cols.append(off[:, np.newaxis])
        lo_cols.append(np.zeros((rows, 1)))
    if rows is None:
        raise DimensionError("extended_gemv needs at least one block or offset")
    return _dd_reduce(np.hstack(hi_cols), np.hstack(lo_cols))
