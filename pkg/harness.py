"""
Test problems, accuracy metrics and experiment orchestration.

Exports:
  Distribution, GeneratorSpec, gen_problem, singular_values
  metric_err1_lse, metric_err2_lse, metric_er1_gls, metric_er2_gls
  Method, ExperimentReport, reference_solution, run_experiment, run_sweep
  kkt_solve, state_vector, mixed_condition, forward_error, forward_error_ceiling
  load_suites, suite_cells, SUITE_ALIASES
  CheckResult, validate_spectrum, validate_precond, validate_factor, VALIDATORS
  left_precond_dense
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from config import SETTINGS, thread_limit
from errors import DimensionError, InvalidInput, MixedLsError, ReportIOError, SpectrumMismatch
from factor import gqr, grq, to_dense
from gls import GlsProblem, GlsState, gls_direct, mpgls
from krylov import (
    KAPPA_BOUND,
    AugmentedOperator,
    ProblemKind,
    augmented_matrix,
    build_bd_precond_gls,
    build_bd_precond_lse,
    build_inverse_precond_gls,
    build_inverse_precond_lse,
    build_left_precond_gls,
    build_left_precond_lse,
    gmres_refine_gls,
    gmres_refine_lse,
    preconditioned_matrix,
    spectrum_check,
)
from lse import LseProblem, LseState, lse_direct, mplse
from precision import PrecisionLevel, demote_matrix, extended_gemv
from refinement import PhaseTimer, RefinementConfig, RefinementTrace, Status

logger = logging.getLogger(__name__)

METRIC_NAMES = {
    ProblemKind.LSE: ("err-1", "err-2"),
    ProblemKind.GLS: ("er-1", "er-2"),
}


# ═══════════════════════════════════════════════════════════════════════════
# Generator
# ═══════════════════════════════════════════════════════════════════════════

class Distribution(str, Enum):
    GEOMETRIC = "geometric"
    ARITHMETIC = "arithmetic"


def check_dims(kind: ProblemKind, dims: Sequence[int]) -> tuple[int, int, int]:
    """Validate a dims triple in the problem's natural order."""
    if len(dims) != 3:
        raise DimensionError(f"dims must have three entries, got {tuple(dims)}")
    a, b, c = (int(d) for d in dims)
    if kind is ProblemKind.LSE:
        m, n, p = a, b, c
        if not (m >= 0 and 1 <= p <= n <= m + p):
            raise DimensionError(f"LSE needs p <= n <= m + p, got (m, n, p) = {(m, n, p)}")
    else:
        n, m, p = a, b, c
        if not (p >= 0 and 1 <= m <= n <= m + p):
            raise DimensionError(f"GLS needs m <= n <= m + p, got (n, m, p) = {(n, m, p)}")
    return a, b, c


@dataclass(frozen=True)
class GeneratorSpec:
    """dims is (m, n, p) for LSE and (n, m, p) for GLS."""

    kind: ProblemKind
    dims: tuple[int, int, int]
    cond: float
    seed: int = 0
    distribution: Distribution = Distribution.GEOMETRIC

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        object.__setattr__(self, "dims", check_dims(self.kind, self.dims))
        if not (math.isfinite(self.cond) and self.cond >= 1.0):
            raise InvalidInput(f"cond must be a finite number >= 1, got {self.cond}")

    def to_record(self) -> dict:
        return {
            "kind": self.kind.value,
            "dims": list(self.dims),
            "cond": self.cond,
            "seed": self.seed,
            "distribution": self.distribution.value,
        }


def singular_values(k: int, cond: float, distribution: Distribution = Distribution.GEOMETRIC) -> np.ndarray:
    """k values from 1 down to 1/cond."""
    if k == 1:
        return np.ones(1)
    if Distribution(distribution) is Distribution.GEOMETRIC:
        return cond ** (-np.arange(k) / (k - 1))
    return np.linspace(1.0, 1.0 / cond, k)


def _orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q


def gen_problem(spec: GeneratorSpec) -> LseProblem | GlsProblem:
    """Stacked matrix U diag(sigma) V^T with orthonormal U, V from seeded Gaussians.

    LSE stacks rows [A; B] ((m+p) x n); GLS stacks columns [W, V]
    (n x (m+p)).  Right-hand sides are standard Gaussian.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.kind is ProblemKind.LSE:
        m, n, p = spec.dims
        sigma = singular_values(n, spec.cond, spec.distribution)
        left = _orthonormal(rng, m + p, n)
        right = _orthonormal(rng, n, n)
        stack = (left * sigma) @ right.T
        return LseProblem(stack[:m], stack[m:], rng.standard_normal(m), rng.standard_normal(p))

    n, m, p = spec.dims
    sigma = singular_values(n, spec.cond, spec.distribution)
    left = _orthonormal(rng, n, n)
    right = _orthonormal(rng, m + p, n)
    stack = (left * sigma) @ right.T
    return GlsProblem(stack[:, :m], stack[:, m:], rng.standard_normal(n))


# ═══════════════════════════════════════════════════════════════════════════
# Metrics
# ═══════════════════════════════════════════════════════════════════════════

def _ratio(num: float, den: float) -> float:
    if not (math.isfinite(num) and math.isfinite(den)):
        return math.inf
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def _relative_gap(num: float, den: float) -> float:
    """|num/den - 1| with the zero-denominator convention of _ratio."""
    if not (math.isfinite(num) and math.isfinite(den)):
        return math.inf
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return abs(num / den - 1.0)


def metric_err1_lse(problem: LseProblem, x) -> float:
    """||Bx - d|| / (||B||_F ||x|| + ||d||)."""
    x = np.asarray(x, dtype=np.float64)
    num = float(np.linalg.norm(problem.B @ x - problem.d))
    return _ratio(num, problem.norms.b_fro * float(np.linalg.norm(x)) + problem.norms.d)


def metric_err2_lse(problem: LseProblem, x, x_ref) -> float:
    """| ||Ax - b|| / ||A x_ref - b|| - 1 |."""
    num = float(np.linalg.norm(problem.A @ np.asarray(x, dtype=np.float64) - problem.b))
    den = float(np.linalg.norm(problem.A @ np.asarray(x_ref, dtype=np.float64) - problem.b))
    return _relative_gap(num, den)


def metric_er1_gls(problem: GlsProblem, x, y) -> float:
    """||Wx + Vy - d|| / (||W||_F ||x|| + ||V||_F ||y|| + ||d||)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    num = float(np.linalg.norm(problem.W @ x + problem.V @ y - problem.d))
    norms = problem.norms
    den = norms.w_fro * float(np.linalg.norm(x)) + norms.v_fro * float(np.linalg.norm(y)) + norms.d
    return _ratio(num, den)


def metric_er2_gls(y, y_ref) -> float:
    """| ||y|| / ||y_ref|| - 1 |."""
    return _relative_gap(float(np.linalg.norm(y)), float(np.linalg.norm(y_ref)))


def compute_metrics(kind: ProblemKind, problem, state, reference) -> dict[str, float]:
    first, second = METRIC_NAMES[kind]
    if kind is ProblemKind.LSE:
        return {
            first: metric_err1_lse(problem, state.x),
            second: metric_err2_lse(problem, state.x, reference.x),
        }
    return {
        first: metric_er1_gls(problem, state.x, state.y),
        second: metric_er2_gls(state.y, reference.y),
    }


# ═══════════════════════════════════════════════════════════════════════════
# Experiments
# ═══════════════════════════════════════════════════════════════════════════

class Method(str, Enum):
    DIRECT = "direct"
    IR = "ir"
    GMRES_LEFT = "gmres-left"
    GMRES_INVERSE = "gmres-inverse"
    GMRES_BD = "gmres-bd"


@dataclass
class ExperimentReport:
    spec: GeneratorSpec
    method: Method
    status: Status
    metrics: dict[str, float]
    iterations: int = 0
    corrections: int = 0
    inner_iterations: int = 0
    phase_timings: dict[str, float] = field(default_factory=dict)
    relative_time: float | None = None
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def to_record(self) -> dict:
        return {
            **self.spec.to_record(),
            "method": self.method.value,
            "status": self.status.value,
            "metrics": dict(self.metrics),
            "iterations": self.iterations,
            "corrections": self.corrections,
            "inner_iterations": self.inner_iterations,
            "phase_timings": dict(self.phase_timings),
            "relative_time": self.relative_time,
            "message": self.message,
        }


def reference_solution(kind: ProblemKind, problem, timer: PhaseTimer | None = None):
    """Working precision direct solve (GRQ or GQR in binary64, no refinement)."""
    timer = timer or PhaseTimer()
    if ProblemKind(kind) is ProblemKind.LSE:
        with timer.phase("factorization"):
            factors = grq(problem.B, problem.A)
        with timer.phase("init"):
            return lse_direct(factors, problem.b, problem.d)
    with timer.phase("factorization"):
        factors = gqr(problem.W, problem.V)
    with timer.phase("init"):
        return gls_direct(factors, problem.d)


def _solve(kind: ProblemKind, method: Method, problem, config: RefinementConfig, alpha_scale: float):
    if method is Method.IR:
        return (mplse if kind is ProblemKind.LSE else mpgls)(problem, config)
    precond = method.value.removeprefix("gmres-")
    driver = gmres_refine_lse if kind is ProblemKind.LSE else gmres_refine_gls
    return driver(problem, config, precond, alpha_scale)


def run_experiment(
    spec: GeneratorSpec,
    method: Method | str,
    config: RefinementConfig | None = None,
    alpha_scale: float = 1.0,
) -> ExperimentReport:
    """Generate, solve, and score one (problem, method) cell.

    Solver errors end up in the report's status and message.
    """
    method = Method(method)
    config = config or RefinementConfig.from_settings(SETTINGS)
    problem = gen_problem(spec)
    names = METRIC_NAMES[spec.kind]

    ref_timer = PhaseTimer()
    try:
        reference = reference_solution(spec.kind, problem, ref_timer)
    except MixedLsError as exc:
        logger.warning("reference solve failed for %s: %s", spec, exc)
        return ExperimentReport(
            spec, method, Status.FAILED, dict.fromkeys(names, math.inf),
            phase_timings=ref_timer.snapshot(), message=f"reference: {exc}",
        )
    ref_seconds = sum(ref_timer.seconds.values())

    if method is Method.DIRECT:
        state, trace = reference, RefinementTrace(status=Status.CONVERGED, timings=ref_timer.snapshot())
    else:
        try:
            state, trace = _solve(spec.kind, method, problem, config, alpha_scale)
        except MixedLsError as exc:
            logger.warning("%s on %s failed: %s", method.value, spec, exc)
            return ExperimentReport(
                spec, method, Status.FAILED, dict.fromkeys(names, math.inf),
                message=f"{type(exc).__name__}: {exc}",
            )

    seconds = sum(trace.timings.values())
    return ExperimentReport(
        spec=spec,
        method=method,
        status=trace.status,
        metrics=compute_metrics(spec.kind, problem, state, reference),
        iterations=trace.iterations,
        corrections=trace.corrections,
        inner_iterations=trace.inner_iterations,
        phase_timings=trace.timings,
        relative_time=seconds / ref_seconds if ref_seconds > 0 else None,
        message="; ".join(trace.notes),
    )


def run_sweep(
    cells: Sequence[tuple[GeneratorSpec, Method]],
    config: RefinementConfig | None = None,
    max_workers: int | None = None,
    on_done: Callable[[int, int], None] | None = None,
) -> list[ExperimentReport]:
    """Run independent cells in a thread pool; reports come back in input order."""
    config = config or RefinementConfig.from_settings(SETTINGS)
    workers = max(1, min(max_workers or thread_limit(), len(cells) or 1))
    reports: list[ExperimentReport | None] = [None] * len(cells)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(run_experiment, spec, method, config): i for i, (spec, method) in enumerate(cells)}
        for done, future in enumerate(as_completed(futures), start=1):
            reports[futures[future]] = future.result()
            if on_done:
                on_done(done, len(cells))
    return reports


# ═══════════════════════════════════════════════════════════════════════════
# Suites
# ═══════════════════════════════════════════════════════════════════════════

SUITE_ALIASES = {"table-lse": "paper-lse", "table-gls": "paper-gls"}


def load_suites(path: str | Path | None = None) -> dict:
    path = Path(path or SETTINGS.suites_path)
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as exc:
        raise ReportIOError(f"cannot read suites from {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"malformed suites file {path}: {exc}") from exc


def _group_dims(kind: ProblemKind, group: dict) -> list[tuple[int, int, int]]:
    """Explicit `dims`, or the n / big_factor / small_divisor shape rule.

    LSE: (m, n, p) = (f n, n, n / s).  GLS: (n, m, p) = (n, n / s, f n).
    """
    if "dims" in group:
        return [tuple(d) for d in group["dims"]]
    dims = []
    for n in group["n"]:
        for f in group["big_factor"]:
            for s in group["small_divisor"]:
                big, small = f * n, n // s
                dims.append((big, n, small) if kind is ProblemKind.LSE else (n, small, big))
    return dims


def suite_cells(
    name: str,
    scale: str = "desk",
    seed: int | None = None,
    suites: dict | None = None,
) -> list[tuple[GeneratorSpec, Method]]:
    suites = suites if suites is not None else load_suites()
    name = SUITE_ALIASES.get(name, name)
    if name not in suites:
        raise InvalidInput(f"unknown suite {name!r}; available: {', '.join(sorted(suites))}")
    suite = suites[name]
    if scale not in suite:
        raise InvalidInput(f"suite {name!r} has no {scale!r} scale")
    kind = ProblemKind(suite["kind"])
    seed = SETTINGS.seed if seed is None else seed
    distribution = Distribution(suite.get("distribution", Distribution.GEOMETRIC.value))

    cells = []
    for group in suite[scale]:
        for dims in _group_dims(kind, group):
            for cond in group["conds"]:
                spec = GeneratorSpec(kind, dims, float(cond), seed, distribution)
                cells.extend((spec, Method(m)) for m in group.get("methods", suite["methods"]))
    return cells


# ═══════════════════════════════════════════════════════════════════════════
# Dense oracles
# ═══════════════════════════════════════════════════════════════════════════

def _kkt_rhs(kind: ProblemKind, problem) -> np.ndarray:
    if kind is ProblemKind.LSE:
        m, n, p = problem.dims
        return np.concatenate([problem.b, problem.d, np.zeros(n)])
    n, m, p = problem.dims
    return np.concatenate([np.zeros(p), problem.d, np.zeros(m)])


def kkt_solve(kind: ProblemKind | str, problem, max_steps: int = 50) -> np.ndarray:
    """Augmented system solved by LU, refined with double-double residuals.

    Refinement stops once the correction falls to unit roundoff relative to
    the solution, stops shrinking, or after max_steps.  Unknowns are ordered
    (r, -v, x) for LSE and (y, -z, x) for GLS.
    """
    kind = ProblemKind(kind)
    f = _kkt_matrix(kind, problem)
    rhs = _kkt_rhs(kind, problem)
    lu = scipy.linalg.lu_factor(f)
    u = scipy.linalg.lu_solve(lu, rhs)
    eps = PrecisionLevel.WORKING.unit_roundoff
    previous = math.inf
    for step in range(max_steps):
        residual = extended_gemv([(f, -u)], offsets=[rhs])
        delta = scipy.linalg.lu_solve(lu, residual)
        u = u + delta
        size = float(np.linalg.norm(delta))
        if size <= eps * float(np.linalg.norm(u)) or size >= previous:
            logger.debug("kkt_solve: stopped after %d refinement steps", step + 1)
            break
        previous = size
    return u


def _kkt_matrix(kind: ProblemKind, problem) -> np.ndarray:
    return augmented_matrix(AugmentedOperator(kind, problem, 1.0))


def state_vector(kind: ProblemKind | str, state: LseState | GlsState) -> np.ndarray:
    if ProblemKind(kind) is ProblemKind.LSE:
        return np.concatenate([state.r, -state.v, state.x])
    return np.concatenate([state.y, -state.z, state.x])


def mixed_condition(kind: ProblemKind | str, problem, u) -> float:
    """|| |F^-1| |F| |u| ||_inf / ||u||_inf for the unscaled augmented matrix."""
    f = _kkt_matrix(ProblemKind(kind), problem)
    finv = scipy.linalg.inv(f)
    u = np.abs(np.asarray(u, dtype=np.float64))
    return float(np.max(np.abs(finv) @ (np.abs(f) @ u)) / np.max(u))


def forward_error(kind: ProblemKind | str, state, exact) -> float:
    exact = np.asarray(exact, dtype=np.float64)
    return float(np.max(np.abs(state_vector(kind, state) - exact)) / np.max(np.abs(exact)))


def forward_error_ceiling(dims: Sequence[int], cond: float, residual_level: PrecisionLevel) -> float:
    """Ten times 4(m+n+p+1) cond u_r + u."""
    total = sum(dims)
    u = PrecisionLevel.WORKING.unit_roundoff
    return 10.0 * (4 * (total + 1) * cond * residual_level.unit_roundoff + u)


# ═══════════════════════════════════════════════════════════════════════════
# Validation suites
# ═══════════════════════════════════════════════════════════════════════════

@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""


# one instance per shape case: LSE (m, n, p) then GLS (n, m, p)
SHAPE_CASES = {
    ProblemKind.LSE: {"m>n": (9, 6, 3), "m=n": (6, 6, 2), "n>m": (5, 7, 3)},
    ProblemKind.GLS: {"n<p": (6, 3, 8), "n=p": (6, 3, 6), "n>p": (8, 4, 5)},
}


def validate_spectrum(tol: float = 1e-8) -> list[CheckResult]:
    results = []
    for kind, cases in SHAPE_CASES.items():
        for case, dims in cases.items():
            name = f"spectrum {kind.value} {case} {dims}"
            try:
                report = spectrum_check(kind, dims, seed=0, tol=tol)
                results.append(CheckResult(name, True, report.max_deviation, tol))
            except SpectrumMismatch as exc:
                results.append(CheckResult(name, False, exc.value, tol, str(exc)))
    return results


def validate_precond(seeds: int = 10, left_tol: float = 1e-8) -> list[CheckResult]:
    """kappa_2 of the split-preconditioned matrix, M F = I for the inverse form
    and the pseudoinverse form against its dense assembly."""
    results = []
    for kind, cases in SHAPE_CASES.items():
        for case, dims in cases.items():
            worst, worst_inf = 0.0, 0.0
            for seed in range(seeds):
                report = spectrum_check(kind, dims, seed=seed, tol=math.inf)
                worst = max(worst, report.condition)
                worst_inf = max(worst_inf, float(np.linalg.cond(_split_matrix(kind, dims, seed), np.inf)))
            results.append(CheckResult(f"kappa_2 {kind.value} {case}", worst <= KAPPA_BOUND + 1e-6, worst, KAPPA_BOUND))
            bound_inf = KAPPA_BOUND * sum(dims)
            results.append(CheckResult(f"kappa_inf {kind.value} {case}", worst_inf <= bound_inf, worst_inf, bound_inf))

            deviation = _inverse_deviation(kind, dims, seed=0)
            results.append(CheckResult(f"inverse M F = I {kind.value} {case}", deviation <= left_tol, deviation, left_tol))
            deviation = _left_form_deviation(kind, dims, seed=0)
            results.append(CheckResult(f"left M = pinv form {kind.value} {case}", deviation <= left_tol, deviation, left_tol))
    return results


def _random_problem(kind: ProblemKind, dims, seed: int):
    rng = np.random.default_rng(seed)
    if kind is ProblemKind.LSE:
        m, n, p = dims
        return LseProblem(rng.standard_normal((m, n)), rng.standard_normal((p, n)), np.zeros(m), np.zeros(p))
    n, m, p = dims
    return GlsProblem(rng.standard_normal((n, m)), rng.standard_normal((n, p)), np.zeros(n))


def _split_matrix(kind: ProblemKind, dims, seed: int) -> np.ndarray:
    problem = _random_problem(kind, dims, seed)
    if kind is ProblemKind.LSE:
        precond = build_bd_precond_lse(grq(problem.B, problem.A), 1.0)
    else:
        precond = build_bd_precond_gls(gqr(problem.W, problem.V), 1.0)
    return preconditioned_matrix(AugmentedOperator(kind, problem, 1.0), precond)


def _inverse_deviation(kind: ProblemKind, dims, seed: int, alpha: float = 1.0) -> float:
    problem = _random_problem(kind, dims, seed)
    if kind is ProblemKind.LSE:
        precond = build_inverse_precond_lse(grq(problem.B, problem.A), alpha)
    else:
        precond = build_inverse_precond_gls(gqr(problem.W, problem.V), alpha)
    x = preconditioned_matrix(AugmentedOperator(kind, problem, alpha), precond)
    return float(np.max(np.abs(x - np.eye(x.shape[0]))))


def _left_form_deviation(kind: ProblemKind, dims, seed: int, alpha: float = 1.0) -> float:
    problem = _random_problem(kind, dims, seed)
    if kind is ProblemKind.LSE:
        precond = build_left_precond_lse(grq(problem.B, problem.A), alpha)
    else:
        precond = build_left_precond_gls(gqr(problem.W, problem.V), alpha)
    applied = np.column_stack([precond.left(e) for e in np.eye(precond.dim)])
    dense = left_precond_dense(kind, problem, alpha)
    return float(np.max(np.abs(applied - dense)) / np.max(np.abs(dense)))


def left_precond_dense(kind: ProblemKind | str, problem, alpha: float) -> np.ndarray:
    """Pseudoinverse-form left preconditioner assembled with np.linalg.pinv; validation only."""
    a = 1.0 / alpha
    if ProblemKind(kind) is ProblemKind.LSE:
        A, B = problem.A, problem.B
        m, n, p = problem.dims
        bp = np.linalg.pinv(B)
        abp = A @ bp
        return np.block([
            [a * np.eye(m), -a * abp, np.zeros((m, n))],
            [-a * abp.T, a * abp.T @ abp, bp.T],
            [np.zeros((n, m)), bp, np.zeros((n, n))],
        ])
    W, V = problem.W, problem.V
    n, m, p = problem.dims
    wp = np.linalg.pinv(W)
    wpv = wp @ V
    return np.block([
        [a * np.eye(p), np.zeros((p, n)), -a * wpv.T],
        [np.zeros((n, p)), np.zeros((n, n)), wp.T],
        [-a * wpv, wp, a * wpv @ wpv.T],
    ])


def factor_backward_errors(kind: ProblemKind, dims, seed: int, level: PrecisionLevel) -> tuple[float, float]:
    """Relative Frobenius reconstruction errors of the two factored matrices."""
    problem = _random_problem(kind, dims, seed)
    low = level is PrecisionLevel.LOW
    if kind is ProblemKind.LSE:
        m, n, p = dims
        if low:
            f = grq(demote_matrix(problem.B), demote_matrix(problem.A))
        else:
            f = grq(problem.B, problem.A)
        q = to_dense(f.q).astype(np.float64)
        b = f.scale_b * (np.hstack([np.zeros((p, n - p)), f.r.astype(np.float64)]) @ q)
        a = f.scale_a * (to_dense(f.z).astype(np.float64) @ f.t.astype(np.float64) @ q)
        return _rel_fro(problem.B, b), _rel_fro(problem.A, a)

    n, m, p = dims
    if low:
        f = gqr(demote_matrix(problem.W), demote_matrix(problem.V))
    else:
        f = gqr(problem.W, problem.V)
    q = to_dense(f.q).astype(np.float64)
    w = f.scale_w * (q @ np.vstack([f.r.astype(np.float64), np.zeros((n - m, m))]))
    v = f.scale_v * (q @ f.t.astype(np.float64) @ to_dense(f.z).astype(np.float64))
    return _rel_fro(problem.W, w), _rel_fro(problem.V, v)


def _rel_fro(exact: np.ndarray, approx: np.ndarray) -> float:
    return float(np.linalg.norm(exact - approx) / np.linalg.norm(exact))


FACTOR_DIMS = {
    ProblemKind.LSE: [(64, 32, 8), (20, 12, 5), (8, 10, 4)],
    ProblemKind.GLS: [(32, 8, 64), (20, 12, 15), (10, 6, 6)],
}


def validate_factor(seeds: int = 20, factor: float = 100.0) -> list[CheckResult]:
    results = []
    for level in (PrecisionLevel.LOW, PrecisionLevel.WORKING):
        limit = factor * level.unit_roundoff
        for kind, shapes in FACTOR_DIMS.items():
            worst = max(
                max(factor_backward_errors(kind, dims, seed, level))
                for dims in shapes
                for seed in range(seeds)
            )
            label = "GRQ" if kind is ProblemKind.LSE else "GQR"
            results.append(CheckResult(f"{label} backward error ({level.value})", worst <= limit, worst, limit))
    return results


VALIDATORS: dict[str, Callable[[], list[CheckResult]]] = {
    "spectrum": validate_spectrum,
    "precond": validate_precond,
    "factor": validate_factor,
}
