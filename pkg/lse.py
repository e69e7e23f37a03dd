"""
Equality-constrained least squares: min ||A x - b|| subject to B x = d.

Exports:
  LseProblem, LseState, LseNorms
  lse_direct             : null-space solve through the GRQ factors
  solve_v                : initial Lagrange multiplier from a residual
  lse_correction_solve   : correction system of the augmented formulation
  lse_residuals          : (f1, f2, f3) at a chosen accumulation precision
  lse_bounds, lse_stop_check
  mplse                  : four-precision iterative refinement driver

The augmented system is

    [ I   0   A ] [  r ]   [ b ]
    [ 0   0   B ] [ -v ] = [ d ]
    [ A^T B^T 0 ] [  x ]   [ 0 ]

and its residuals are f1 = b - r - A x, f2 = d - B x, f3 = -A^T r + B^T v.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from errors import DimensionError
from factor import GrqFactors, apply_orthogonal, gemv, grq, trsv
from precision import (
    PrecisionLevel,
    demote_matrix,
    demote_parts,
    demote_vector,
    extended_gemv,
    promote_parts,
)
from refinement import PhaseTimer, RefinementConfig, RefinementTrace, refine, within_bounds

logger = logging.getLogger(__name__)

__all__ = [
    "LseProblem", "LseState", "LseNorms", "RefinementConfig",
    "lse_direct", "solve_v", "lse_correction_solve", "lse_residuals",
    "lse_bounds", "lse_stop_check", "mplse",
]


# ---------------------------------------------------------------------------
# Problem and state
# ---------------------------------------------------------------------------

class LseNorms(NamedTuple):
    b: float
    d: float
    a_fro: float
    b_fro: float


@dataclass
class LseProblem:
    A: np.ndarray
    B: np.ndarray
    b: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.float64)
        self.B = np.asarray(self.B, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.d = np.asarray(self.d, dtype=np.float64)
        if self.A.ndim != 2 or self.B.ndim != 2:
            raise DimensionError("A and B must be matrices")
        m, n = self.A.shape
        p = self.B.shape[0]
        if self.B.shape[1] != n:
            raise DimensionError(f"A is {m}x{n} but B is {self.B.shape[0]}x{self.B.shape[1]}")
        if self.b.shape != (m,) or self.d.shape != (p,):
            raise DimensionError(f"rhs shapes {self.b.shape}, {self.d.shape} do not fit ({m}, {n}, {p})")
        if not (1 <= p <= n <= m + p):
            raise DimensionError(f"LSE needs p <= n <= m + p, got (m, n, p) = ({m}, {n}, {p})")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.A.shape[0], self.A.shape[1], self.B.shape[0]

    @cached_property
    def norms(self) -> LseNorms:
        return LseNorms(
            b=float(np.linalg.norm(self.b)),
            d=float(np.linalg.norm(self.d)),
            a_fro=float(np.linalg.norm(self.A, "fro")),
            b_fro=float(np.linalg.norm(self.B, "fro")),
        )


@dataclass
class LseState:
    x: np.ndarray
    r: np.ndarray
    v: np.ndarray

    def norms(self) -> tuple[float, float, float]:
        return (
            float(np.linalg.norm(self.x)),
            float(np.linalg.norm(self.r)),
            float(np.linalg.norm(self.v)),
        )


# ---------------------------------------------------------------------------
# Solves through the GRQ factors
# ---------------------------------------------------------------------------

def lse_direct(factors: GrqFactors, b, d) -> LseState:
    """Null-space solution at the precision of `factors`.

    r is the least squares residual read off the factors, v is zero.
    """
    m, n, p = factors.m, factors.n, factors.p
    k = n - p
    (bh, dh), s = demote_parts([np.asarray(b) / factors.scale_a, np.asarray(d) / factors.scale_b], factors.level)

    y2 = trsv(factors.r, dh, block="R")
    c = apply_orthogonal(factors.z, bh, transpose=True)
    y1 = trsv(factors.t11, c[:k] - factors.t12 @ y2, block="T11")
    x = apply_orthogonal(factors.q, np.concatenate([y1, y2]), transpose=True)
    q = np.concatenate([np.zeros(k, dtype=c.dtype), c[k:] - factors.t22 @ y2])
    r = apply_orthogonal(factors.z, q)

    x, r = promote_parts([x, r], s)
    return LseState(x=x, r=factors.scale_a * r, v=np.zeros(p))


def solve_v(factors: GrqFactors, a, r, residual_precision: PrecisionLevel) -> np.ndarray:
    """R^T v = (Q A^T r)[n-p:], with A^T r accumulated at residual_precision."""
    k = factors.n - factors.p
    g = gemv(a, r, transpose=True, accumulation=residual_precision)
    (gh,), s = demote_parts([g], factors.level)
    w = apply_orthogonal(factors.q, gh)
    v = trsv(factors.r, w[k:], transpose=True, block="R")
    return s * v.astype(np.float64) / factors.scale_b


def correction_cascade(factors: GrqFactors, f1, f2, f3):
    k = factors.n - factors.p
    u = apply_orthogonal(factors.q, f3)
    w = apply_orthogonal(factors.z, f1, transpose=True)

    y2 = trsv(factors.r, f2, block="R")
    q1 = trsv(factors.t11, u[:k], transpose=True, block="T11")
    y1 = trsv(factors.t11, w[:k] - q1 - factors.t12 @ y2, block="T11")
    q2 = w[k:] - factors.t22 @ y2

    dr = apply_orthogonal(factors.z, np.concatenate([q1, q2]))
    dx = apply_orthogonal(factors.q, np.concatenate([y1, y2]), transpose=True)
    dv = trsv(factors.r, factors.t12.T @ q1 + factors.t22.T @ q2 - u[k:], transpose=True, block="R")
    return dr, dv, dx


def lse_correction_solve(factors: GrqFactors, f1, f2, f3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve dr + A dx = f1, B dx = f2, A^T dr - B^T dv = f3.

    The right-hand side is mapped into the demoted system, scaled jointly
    to the factors' precision, solved, and mapped back to binary64.
    """
    sa, sb = factors.scale_a, factors.scale_b
    hats, s = demote_parts(
        [np.asarray(f1), (sa / sb) * np.asarray(f2), np.asarray(f3) / sa], factors.level
    )
    dr, dv, dx = promote_parts(correction_cascade(factors, *hats), s)
    return dr, (sa / sb) * dv, dx / sa


# ---------------------------------------------------------------------------
# Residuals and stopping
# ---------------------------------------------------------------------------

def lse_residuals(problem: LseProblem, state: LseState, level: PrecisionLevel):
    A, B = problem.A, problem.B
    if level is PrecisionLevel.EXTENDED:
        f1 = extended_gemv([(A, -state.x)], offsets=[problem.b, -state.r])
        f2 = extended_gemv([(B, -state.x)], offsets=[problem.d])
        f3 = extended_gemv([(A.T, -state.r), (B.T, state.v)])
        return f1, f2, f3
    f1 = problem.b - state.r - gemv(A, state.x, accumulation=level)
    f2 = problem.d - gemv(B, state.x, accumulation=level)
    f3 = gemv(B, state.v, transpose=True, accumulation=level) - gemv(A, state.r, transpose=True, accumulation=level)
    return f1, f2, f3


def lse_bounds(problem_norms: LseNorms, state_norms: tuple[float, float, float]) -> tuple[float, float, float]:
    nx, nr, nv = state_norms
    return (
        problem_norms.b + nr + problem_norms.a_fro * nx,
        problem_norms.d + problem_norms.b_fro * nx,
        problem_norms.a_fro * nr + problem_norms.b_fro * nv,
    )


def lse_stop_check(f_norms, problem_norms: LseNorms, state_norms, tol: float) -> bool:
    """state_norms is (||x||, ||r||, ||v||); comparison is inclusive."""
    return within_bounds(f_norms, lse_bounds(problem_norms, state_norms), tol)


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def factorize_lse(problem: LseProblem, level: PrecisionLevel) -> tuple[GrqFactors, np.ndarray, float]:
    """GRQ at `level`; also returns A as stored for the factorization and its scale."""
    if level is PrecisionLevel.LOW:
        a_low = demote_matrix(problem.A)
        return grq(demote_matrix(problem.B), a_low), a_low.data, a_low.scale
    return grq(problem.B, problem.A), problem.A, 1.0


def initial_residual(problem: LseProblem, a_stored: np.ndarray, a_scale: float, x: np.ndarray) -> np.ndarray:
    """b - A x with the product formed at the precision A is stored in."""
    if a_stored.dtype == np.float32:
        xs = demote_vector(x)
        ax = (a_scale * xs.scale) * (a_stored @ xs.data).astype(np.float64)
        return problem.b - ax
    return problem.b - a_stored @ x


def mplse(problem: LseProblem, config: RefinementConfig | None = None) -> tuple[LseState, RefinementTrace]:
    """Mixed precision LSE: GRQ at u_f, corrections at u_s, residuals at u_r."""
    config = config or RefinementConfig()
    timer = PhaseTimer()

    with timer.phase("factorization"):
        factors, a_stored, a_scale = factorize_lse(problem, config.factor_level)
    logger.debug("GRQ of (m, n, p) = %s at %s", problem.dims, factors.level.value)
    with timer.phase("init"):
        state = lse_direct(factors, problem.b, problem.d)
        state.r = initial_residual(problem, a_stored, a_scale, state.x)
        state.v = solve_v(factors, problem.A, state.r, config.residual_level)
    solve_factors = factors.astype(config.solve_level)

    def residuals():
        return lse_residuals(problem, state, config.residual_level)

    def bounds():
        return lse_bounds(problem.norms, state.norms())

    def correct(fs) -> int:
        dr, dv, dx = lse_correction_solve(solve_factors, *fs)
        state.x = state.x + dx
        state.r = state.r + dr
        state.v = state.v + dv
        return 0

    trace = refine(residuals, bounds, correct, config, timer, label="mplse")
    trace.timings = timer.snapshot()
    return state, trace
