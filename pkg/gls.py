"""
Generalized least squares: min ||y|| subject to W x + V y = d.

Exports:
  GlsProblem, GlsState, GlsNorms
  gls_direct             : Paige's method through the GQR factors
  init_z                 : multiplier consistent with a given y
  gls_correction_solve   : correction system of the augmented formulation
  gls_residuals          : (f1, f2, f3) at a chosen accumulation precision
  gls_bounds, gls_stop_check
  mpgls                  : four-precision iterative refinement driver

The augmented system is

    [ I   V^T  0 ] [  y ]   [ 0 ]
    [ V   0    W ] [ -z ] = [ d ]
    [ 0   W^T  0 ] [  x ]   [ 0 ]

and its residuals are f1 = -y + V^T z, f2 = d - W x - V y, f3 = W^T z.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from errors import DimensionError
from factor import GqrFactors, apply_orthogonal, gemv, gqr, trsv
from precision import PrecisionLevel, demote_matrix, demote_parts, extended_gemv, promote_parts
from refinement import PhaseTimer, RefinementConfig, RefinementTrace, refine, within_bounds

logger = logging.getLogger(__name__)

__all__ = [
    "GlsProblem", "GlsState", "GlsNorms", "RefinementConfig",
    "gls_direct", "init_z", "gls_correction_solve", "gls_residuals",
    "gls_bounds", "gls_stop_check", "mpgls",
]


class GlsNorms(NamedTuple):
    d: float
    w_fro: float
    v_fro: float


@dataclass
class GlsProblem:
    W: np.ndarray
    V: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.V = np.asarray(self.V, dtype=np.float64)
        self.d = np.asarray(self.d, dtype=np.float64)
        if self.W.ndim != 2 or self.V.ndim != 2:
            raise DimensionError("W and V must be matrices")
        n, m = self.W.shape
        p = self.V.shape[1]
        if self.V.shape[0] != n or self.d.shape != (n,):
            raise DimensionError(f"V {self.V.shape} and d {self.d.shape} do not fit W {self.W.shape}")
        if not (1 <= m <= n <= m + p):
            raise DimensionError(f"GLS needs m <= n <= m + p, got (n, m, p) = ({n}, {m}, {p})")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.W.shape[0], self.W.shape[1], self.V.shape[1]

    @cached_property
    def norms(self) -> GlsNorms:
        return GlsNorms(
            d=float(np.linalg.norm(self.d)),
            w_fro=float(np.linalg.norm(self.W, "fro")),
            v_fro=float(np.linalg.norm(self.V, "fro")),
        )


@dataclass
class GlsState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def norms(self) -> tuple[float, float, float]:
        return (
            float(np.linalg.norm(self.x)),
            float(np.linalg.norm(self.y)),
            float(np.linalg.norm(self.z)),
        )


# ---------------------------------------------------------------------------
# Solves through the GQR factors
# ---------------------------------------------------------------------------

def gls_direct(factors: GqrFactors, d) -> GlsState:
    m, k = factors.m, factors.split
    (dh,), s = demote_parts([np.asarray(d) / factors.scale_v], factors.level)

    c = apply_orthogonal(factors.q, dh, transpose=True)
    s2 = trsv(factors.t22, c[m:], block="T22")
    x = trsv(factors.r, c[:m] - factors.t12 @ s2, block="R")
    y = apply_orthogonal(factors.z, np.concatenate([np.zeros(k, dtype=s2.dtype), s2]), transpose=True)

    x, y = promote_parts([x, y], s)
    return GlsState(x=(factors.scale_v / factors.scale_w) * x, y=y, z=np.zeros(factors.n))


def init_z(factors: GqrFactors, y, level: PrecisionLevel | None = None) -> np.ndarray:
    """z = Q [0; h2] with T22^T h2 = (Z y)[p-n+m:].

    Computed at the factors' precision unless `level` asks for a higher one.
    """
    if level is not None and level.unit_roundoff < factors.level.unit_roundoff:
        factors = factors.astype(level)
    m, k = factors.m, factors.split
    (yh,), s = demote_parts([np.asarray(y)], factors.level)
    g = apply_orthogonal(factors.z, yh)
    h2 = trsv(factors.t22, g[k:], transpose=True, block="T22")
    z = apply_orthogonal(factors.q, np.concatenate([np.zeros(m, dtype=h2.dtype), h2]))
    return s * z.astype(np.float64) / factors.scale_v


def correction_cascade(factors: GqrFactors, f1, f2, f3):
    m, k = factors.m, factors.split
    u = apply_orthogonal(factors.q, f2, transpose=True)
    w = apply_orthogonal(factors.z, f1)

    h1 = trsv(factors.r, f3, transpose=True, block="R")
    g2 = trsv(factors.t22, u[m:], block="T22")
    h2 = trsv(factors.t22, w[k:] - g2 - factors.t12.T @ h1, transpose=True, block="T22")
    g1 = w[:k] - factors.t11.T @ h1

    dy = apply_orthogonal(factors.z, np.concatenate([g1, g2]), transpose=True)
    dz = -apply_orthogonal(factors.q, np.concatenate([h1, h2]))
    dx = trsv(factors.r, u[:m] - factors.t11 @ g1 - factors.t12 @ g2, block="R")
    return dy, dz, dx


def gls_correction_solve(factors: GqrFactors, f1, f2, f3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve dy - V^T dz = f1, W dx + V dy = f2, W^T dz = -f3."""
    sw, sv = factors.scale_w, factors.scale_v
    hats, s = demote_parts(
        [np.asarray(f1), np.asarray(f2) / sv, (sv / sw) * np.asarray(f3)], factors.level
    )
    dy, dz, dx = promote_parts(correction_cascade(factors, *hats), s)
    return dy, dz / sv, (sv / sw) * dx


# ---------------------------------------------------------------------------
# Residuals and stopping
# ---------------------------------------------------------------------------

def gls_residuals(problem: GlsProblem, state: GlsState, level: PrecisionLevel):
    W, V = problem.W, problem.V
    if level is PrecisionLevel.EXTENDED:
        f1 = extended_gemv([(V.T, state.z)], offsets=[-state.y])
        f2 = extended_gemv([(W, -state.x), (V, -state.y)], offsets=[problem.d])
        f3 = extended_gemv([(W.T, state.z)])
        return f1, f2, f3
    f1 = gemv(V, state.z, transpose=True, accumulation=level) - state.y
    f2 = problem.d - gemv(W, state.x, accumulation=level) - gemv(V, state.y, accumulation=level)
    f3 = gemv(W, state.z, transpose=True, accumulation=level).astype(np.float64)
    return f1, f2, f3


def gls_bounds(problem_norms: GlsNorms, state_norms: tuple[float, float, float]) -> tuple[float, float, float]:
    nx, ny, nz = state_norms
    return (
        ny + problem_norms.v_fro * nz,
        problem_norms.d + problem_norms.w_fro * nx + problem_norms.v_fro * ny,
        problem_norms.w_fro * nz,
    )


def gls_stop_check(f_norms, problem_norms: GlsNorms, state_norms, tol: float) -> bool:
    """state_norms is (||x||, ||y||, ||z||); comparison is inclusive."""
    return within_bounds(f_norms, gls_bounds(problem_norms, state_norms), tol)


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def factorize_gls(problem: GlsProblem, level: PrecisionLevel) -> GqrFactors:
    if level is PrecisionLevel.LOW:
        return gqr(demote_matrix(problem.W), demote_matrix(problem.V))
    return gqr(problem.W, problem.V)


def mpgls(problem: GlsProblem, config: RefinementConfig | None = None) -> tuple[GlsState, RefinementTrace]:
    """Mixed precision GLS: GQR at u_f, corrections at u_s, residuals at u_r."""
    config = config or RefinementConfig()
    timer = PhaseTimer()

    with timer.phase("factorization"):
        factors = factorize_gls(problem, config.factor_level)
    logger.debug("GQR of (n, m, p) = %s at %s", problem.dims, factors.level.value)
    with timer.phase("init"):
        state = gls_direct(factors, problem.d)
        state.z = init_z(factors, state.y)
    solve_factors = factors.astype(config.solve_level)

    def residuals():
        return gls_residuals(problem, state, config.residual_level)

    def bounds():
        return gls_bounds(problem.norms, state.norms())

    def correct(fs) -> int:
        dy, dz, dx = gls_correction_solve(solve_factors, *fs)
        state.x = state.x + dx
        state.y = state.y + dy
        state.z = state.z + dz
        return 0

    trace = refine(residuals, bounds, correct, config, timer, label="mpgls")
    trace.timings = timer.snapshot()
    return state, trace
