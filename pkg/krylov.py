"""
GMRES-based iterative refinement for the LSE and GLS augmented systems.

Exports:
  ProblemKind, AugmentedOperator, augmented_apply, augmented_matrix
  PrecondKind, Preconditioner
  build_left_precond_lse / build_left_precond_gls    : M in pseudoinverse form, applied blockwise
  build_inverse_precond_lse / build_inverse_precond_gls : exact inverse through the correction cascade
  build_bd_precond_lse / build_bd_precond_gls        : block-diagonal split (M_l, M_r)
  gmres, GmresReport                                 : full GMRES, MGS Arnoldi, Givens
  gmres_refine_lse / gmres_refine_gls                : GMRES-IR drivers
  expected_spectrum, spectrum_multiplicities, spectrum_check, SpectrumReport
  preconditioned_matrix

The alpha-scaled augmented matrices are

  LSE  [ aI_m  0   A ]        GLS  [ aI_p  V^T  0 ]
       [ 0     0   B ]             [ V     0    W ]
       [ A^T  B^T  0 ]             [ 0    W^T   0 ]

Preconditioners are always applied from binary64 factors; GMRES runs in
binary64 throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
import scipy.linalg

from errors import DimensionError, InvalidInput, SingularTriangular, SpectrumMismatch
from factor import GqrFactors, GrqFactors, apply_orthogonal, gqr, grq, to_dense, trsv
from gls import (
    GlsProblem,
    GlsState,
    factorize_gls,
    gls_bounds,
    gls_direct,
    gls_residuals,
    init_z,
    correction_cascade as gls_cascade,
)
from lse import (
    LseProblem,
    LseState,
    factorize_lse,
    initial_residual,
    lse_bounds,
    lse_direct,
    lse_residuals,
    solve_v,
    correction_cascade as lse_cascade,
)
from precision import PrecisionLevel
from refinement import PhaseTimer, RefinementConfig, RefinementTrace, refine

logger = logging.getLogger(__name__)


class ProblemKind(str, Enum):
    LSE = "lse"
    GLS = "gls"


# ---------------------------------------------------------------------------
# Augmented operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AugmentedOperator:
    kind: ProblemKind
    problem: LseProblem | GlsProblem
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        if not self.alpha > 0:
            raise InvalidInput(f"alpha must be positive, got {self.alpha}")

    @property
    def blocks(self) -> tuple[int, int, int]:
        """Block sizes in unknown order: (m, p, n) for LSE, (p, n, m) for GLS."""
        if self.kind is ProblemKind.LSE:
            m, n, p = self.problem.dims
            return m, p, n
        n, m, p = self.problem.dims
        return p, n, m

    @property
    def total_dim(self) -> int:
        return sum(self.blocks)

    def __call__(self, u) -> np.ndarray:
        return augmented_apply(self, u)


def _split3(u: np.ndarray, sizes: tuple[int, int, int]):
    a, b, _ = sizes
    return u[:a], u[a:a + b], u[a + b:]


def augmented_apply(op: AugmentedOperator, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (op.total_dim,):
        raise DimensionError(f"augmented operator of order {op.total_dim} applied to shape {u.shape}")
    s1, s2, s3 = _split3(u, op.blocks)
    a = op.alpha
    if op.kind is ProblemKind.LSE:
        A, B = op.problem.A, op.problem.B
        return np.concatenate([a * s1 + A @ s3, B @ s3, A.T @ s1 + B.T @ s2])
    W, V = op.problem.W, op.problem.V
    return np.concatenate([a * s1 + V.T @ s2, V @ s1 + W @ s3, W.T @ s2])


def augmented_matrix(op: AugmentedOperator) -> np.ndarray:
    """Dense assembly; validation only."""
    a = op.alpha
    if op.kind is ProblemKind.LSE:
        A, B = op.problem.A, op.problem.B
        m, n, p = op.problem.dims
        return np.block([
            [a * np.eye(m), np.zeros((m, p)), A],
            [np.zeros((p, m)), np.zeros((p, p)), B],
            [A.T, B.T, np.zeros((n, n))],
        ])
    W, V = op.problem.W, op.problem.V
    n, m, p = op.problem.dims
    return np.block([
        [a * np.eye(p), V.T, np.zeros((p, m))],
        [V, np.zeros((n, n)), W],
        [np.zeros((m, p)), W.T, np.zeros((m, m))],
    ])


# ---------------------------------------------------------------------------
# Preconditioners
# ---------------------------------------------------------------------------

class PrecondKind(str, Enum):
    LEFT_LSE = "left-lse"
    LEFT_GLS = "left-gls"
    INVERSE_LSE = "inverse-lse"
    INVERSE_GLS = "inverse-gls"
    BD_LSE = "bd-lse"
    BD_GLS = "bd-gls"


@dataclass(frozen=True)
class Preconditioner:
    kind: PrecondKind
    alpha: float
    blocks: tuple[int, int, int]
    left: Callable[[np.ndarray], np.ndarray]
    right: Callable[[np.ndarray], np.ndarray] | None = None
    case: str = ""

    @property
    def is_split(self) -> bool:
        return self.right is not None

    @property
    def dim(self) -> int:
        return sum(self.blocks)


def _require_nonsingular(t: np.ndarray, block: str):
    zeros = np.flatnonzero(np.diag(t) == 0)
    if zeros.size:
        raise SingularTriangular(int(zeros[0]), block)


def _checked(blocks: tuple[int, int, int], fn: Callable) -> Callable:
    total = sum(blocks)

    def apply(w):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (total,):
            raise DimensionError(f"preconditioner of order {total} applied to shape {w.shape}")
        return np.concatenate(fn(*_split3(w, blocks)))

    return apply


def build_left_precond_lse(factors: GrqFactors, alpha: float) -> Preconditioner:
    """The block matrix built from B^+ = Q^T [0; R^-1], applied blockwise.

    For n > p its third block row has rank p, so M F is singular and a
    Krylov space started from M w never leaves row(B) in the x block.
    """
    if not alpha > 0:
        raise InvalidInput(f"alpha must be positive, got {alpha}")
    f = factors.astype(PrecisionLevel.WORKING)
    _require_nonsingular(f.r, "R")
    k = f.n - f.p
    blocks = (f.m, f.p, f.n)

    def a_mul(y):
        return apply_orthogonal(f.z, f.t @ apply_orthogonal(f.q, y))

    def a_tmul(y):
        return apply_orthogonal(f.q, f.t.T @ apply_orthogonal(f.z, y, transpose=True), transpose=True)

    def b_pinv(w):
        return apply_orthogonal(f.q, np.concatenate([np.zeros(k), trsv(f.r, w, block="R")]), transpose=True)

    def b_pinv_t(y):
        return trsv(f.r, apply_orthogonal(f.q, y)[k:], transpose=True, block="R")

    def apply(w1, w2, w3):
        x2 = b_pinv(w2)
        o1 = (w1 - a_mul(x2)) / alpha
        o2 = b_pinv_t(w3 - a_tmul(o1))
        return o1, o2, x2

    return Preconditioner(PrecondKind.LEFT_LSE, alpha, blocks, _checked(blocks, apply), case="pseudoinverse")


def build_left_precond_gls(factors: GqrFactors, alpha: float) -> Preconditioner:
    """The block matrix built from W^+ = R^-1 [I 0] Q^T, applied blockwise.

    Rank deficient when n > m, in the same way as the LSE form.
    """
    if not alpha > 0:
        raise InvalidInput(f"alpha must be positive, got {alpha}")
    f = factors.astype(PrecisionLevel.WORKING)
    _require_nonsingular(f.r, "R")
    blocks = (f.p, f.n, f.m)

    def v_mul(y):
        return apply_orthogonal(f.q, f.t @ apply_orthogonal(f.z, y))

    def v_tmul(y):
        return apply_orthogonal(f.z, f.t.T @ apply_orthogonal(f.q, y, transpose=True), transpose=True)

    def apply(w1, w2, w3):
        o2 = apply_orthogonal(f.q, np.concatenate([trsv(f.r, w3, transpose=True, block="R"), np.zeros(f.n - f.m)]))
        o1 = (w1 - v_tmul(o2)) / alpha
        o3 = trsv(f.r, apply_orthogonal(f.q, w2 - v_mul(o1), transpose=True)[: f.m], block="R")
        return o1, o2, o3

    return Preconditioner(PrecondKind.LEFT_GLS, alpha, blocks, _checked(blocks, apply), case="pseudoinverse")


def build_inverse_precond_lse(factors: GrqFactors, alpha: float) -> Preconditioner:
    """Inverse of the alpha-scaled LSE matrix, applied through the GRQ cascade.

    Equals build_left_precond_lse when n == p.
    """
    if not alpha > 0:
        raise InvalidInput(f"alpha must be positive, got {alpha}")
    f = factors.astype(PrecisionLevel.WORKING)
    _require_nonsingular(f.r, "R")
    _require_nonsingular(f.t11, "T11")
    blocks = (f.m, f.p, f.n)

    def apply(w1, w2, w3):
        dr, dv, dx = lse_cascade(f, w1, w2, alpha * w3)
        return dr / alpha, -dv / alpha, dx

    return Preconditioner(PrecondKind.INVERSE_LSE, alpha, blocks, _checked(blocks, apply), case="cascade")


def build_inverse_precond_gls(factors: GqrFactors, alpha: float) -> Preconditioner:
    """Inverse of the alpha-scaled GLS matrix, applied through the GQR cascade."""
    if not alpha > 0:
        raise InvalidInput(f"alpha must be positive, got {alpha}")
    f = factors.astype(PrecisionLevel.WORKING)
    _require_nonsingular(f.r, "R")
    _require_nonsingular(f.t22, "T22")
    blocks = (f.p, f.n, f.m)

    def apply(w1, w2, w3):
        dy, dz, dx = gls_cascade(f, w1 / alpha, w2, w3 / alpha)
        return dy, -alpha * dz, dx

    return Preconditioner(PrecondKind.INVERSE_GLS, alpha, blocks, _checked(blocks, apply), case="cascade")


def build_bd_precond_lse(factors: GrqFactors, alpha: float) -> Preconditioner:
    """Split preconditioner with M_l F M_r of fixed spectrum.

    U is T[:n, :n] when m >= n, otherwise T completed to n x n by identity
    rows; Y is its trailing p x p block.  M_r = M_l^T.
    """
    if not alpha > 0:
        raise InvalidInput(f"alpha must be positive, got {alpha}")
    f = factors.astype(PrecisionLevel.WORKING)
    m, n, p = f.m, f.n, f.p
    u = np.eye(n)
    u[: min(m, n), :] = f.t[: min(m, n), :]
    y = u[n - p:, n - p:]
    _require_nonsingular(f.r, "R")
    _require_nonsingular(u, "U")
    lo, hi = 1.0 / math.sqrt(alpha), math.sqrt(alpha)
    blocks = (m, p, n)

    def left(w1, w2, w3):
        return (
            lo * w1,
            lo * (y @ trsv(f.r, w2, block="R")),
            hi * trsv(u, apply_orthogonal(f.q, w3), transpose=True, block="U"),
        )

    def right(w1, w2, w3):
        return (
            lo * w1,
            lo * trsv(f.r, y.T @ w2, transpose=True, block="R"),
            hi * apply_orthogonal(f.q, trsv(u, w3, block="U"), transpose=True),
        )

    return Preconditioner(
        PrecondKind.BD_LSE, alpha, blocks,
        left=_checked(blocks, left), right=_checked(blocks, right),
        case="m>=n" if m >= n else "n>m",
    )


def build_bd_precond_gls(factors: GqrFactors, alpha: float) -> Preconditioner:
    """GLS counterpart; U = T[:, p-n:] when n <= p, else [[I, T1], [0, T2]]."""
    if not alpha > 0:
        raise InvalidInput(f"alpha must be positive, got {alpha}")
    f = factors.astype(PrecisionLevel.WORKING)
    n, m, p = f.n, f.m, f.p
    k = min(n, p)
    u = np.eye(n)
    u[:, n - k:] = f.t[:, p - k:]
    y = u[:m, :m]
    _require_nonsingular(f.r, "R")
    _require_nonsingular(u, "U")
    lo, hi = 1.0 / math.sqrt(alpha), math.sqrt(alpha)
    blocks = (p, n, m)

    def left(w1, w2, w3):
        return (
            lo * w1,
            hi * trsv(u, apply_orthogonal(f.q, w2, transpose=True), block="U"),
            lo * (y.T @ trsv(f.r, w3, transpose=True, block="R")),
        )

    def right(w1, w2, w3):
        return (
            lo * w1,
            hi * apply_orthogonal(f.q, trsv(u, w2, transpose=True, block="U")),
            lo * trsv(f.r, y @ w3, block="R"),
        )

    return Preconditioner(
        PrecondKind.BD_GLS, alpha, blocks,
        left=_checked(blocks, left), right=_checked(blocks, right),
        case="n<=p" if n <= p else "n>p",
    )


def preconditioned_matrix(op: AugmentedOperator, precond: Preconditioner) -> np.ndarray:
    """Dense M F (left) or M_l F M_r (split); validation only."""
    f = augmented_matrix(op)
    eye = np.eye(op.total_dim)
    ml = np.column_stack([precond.left(e) for e in eye])
    if precond.is_split:
        mr = np.column_stack([precond.right(e) for e in eye])
        return ml @ f @ mr
    return ml @ f


# ---------------------------------------------------------------------------
# GMRES
# ---------------------------------------------------------------------------

@dataclass
class GmresReport:
    solution: np.ndarray
    iterations: int
    residual_norms: list[float]
    converged: bool
    message: str = ""


def gmres(
    op: Callable[[np.ndarray], np.ndarray],
    precond: Preconditioner | None,
    rhs,
    rel_tol: float = 1e-6,
    max_iter: int | None = None,
) -> GmresReport:
    """Full GMRES from a zero initial guess.

    Left kind solves M F s = M rhs; split kind solves M_l F M_r t = M_l rhs
    and returns s = M_r t.  residual_norms holds the preconditioned residual
    norms, the initial one first.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.ndim != 1:
        raise DimensionError(f"rhs must be a vector, got shape {rhs.shape}")
    dim = rhs.shape[0]
    if getattr(op, "total_dim", dim) != dim:
        raise DimensionError(f"rhs of length {dim} for an operator of order {op.total_dim}")
    if not 0 < rel_tol < 1:
        raise InvalidInput(f"rel_tol must lie in (0, 1), got {rel_tol}")
    max_iter = dim if max_iter is None else max_iter

    if precond is None:
        apply_op, b = op, rhs
    elif precond.is_split:
        def apply_op(t):
            return precond.left(op(precond.right(t)))
        b = precond.left(rhs)
    else:
        def apply_op(t):
            return precond.left(op(t))
        b = precond.left(rhs)

    beta = float(np.linalg.norm(b))
    if beta == 0.0:
        return GmresReport(np.zeros(dim), 0, [0.0], True)

    basis = np.zeros((max_iter + 1, dim))
    hess = np.zeros((max_iter + 1, max_iter))
    cs = np.zeros(max_iter)
    sn = np.zeros(max_iter)
    g = np.zeros(max_iter + 1)
    g[0] = beta
    basis[0] = b / beta
    norms = [beta]
    converged = False
    message = ""
    k = 0

    for j in range(max_iter):
        w = apply_op(basis[j])
        w_norm = float(np.linalg.norm(w))
        for i in range(j + 1):
            hess[i, j] = w @ basis[i]
            w = w - hess[i, j] * basis[i]
        h_next = float(np.linalg.norm(w))
        hess[j + 1, j] = h_next

        for i in range(j):
            top = cs[i] * hess[i, j] + sn[i] * hess[i + 1, j]
            hess[i + 1, j] = -sn[i] * hess[i, j] + cs[i] * hess[i + 1, j]
            hess[i, j] = top
        denom = math.hypot(hess[j, j], hess[j + 1, j])
        k = j + 1
        if denom == 0.0:
            k = j
            message = f"singular Hessenberg column at step {j + 1}"
            break
        cs[j] = hess[j, j] / denom
        sn[j] = hess[j + 1, j] / denom
        hess[j, j] = denom
        hess[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]

        res = abs(g[j + 1])
        norms.append(res)
        if res <= rel_tol * beta:
            converged = True
            break
        if h_next <= 1e-14 * w_norm:
            message = f"Arnoldi breakdown at step {k} with residual {res:.3e}"
            break
        basis[j + 1] = w / h_next

    if not converged and not message:
        message = f"no convergence in {max_iter} iterations (residual {norms[-1] / beta:.3e} relative)"
    if message:
        logger.debug("gmres: %s", message)

    if k == 0:
        return GmresReport(np.zeros(dim), 0, norms, converged, message)
    coeffs = scipy.linalg.solve_triangular(hess[:k, :k], g[:k], lower=False, check_finite=False)
    t = basis[:k].T @ coeffs
    solution = precond.right(t) if precond is not None and precond.is_split else t
    return GmresReport(solution, k, norms, converged, message)


# ---------------------------------------------------------------------------
# GMRES-based refinement
# ---------------------------------------------------------------------------

class GmresPrecond(str, Enum):
    LEFT = "left"
    INVERSE = "inverse"
    BD = "bd"


_LSE_BUILDERS = {
    GmresPrecond.LEFT: build_left_precond_lse,
    GmresPrecond.INVERSE: build_inverse_precond_lse,
    GmresPrecond.BD: build_bd_precond_lse,
}
_GLS_BUILDERS = {
    GmresPrecond.LEFT: build_left_precond_gls,
    GmresPrecond.INVERSE: build_inverse_precond_gls,
    GmresPrecond.BD: build_bd_precond_gls,
}


def _alpha(norm: float, alpha_scale: float) -> float:
    a = alpha_scale * norm
    return a if a > 0 and math.isfinite(a) else 1.0


def _inner_solver(config: RefinementConfig, op: AugmentedOperator, precond: Preconditioner, notes: list[str]):
    max_iter = config.inner_max_iter or op.total_dim

    def solve(rhs: np.ndarray) -> GmresReport:
        report = gmres(op, precond, rhs, config.inner_tol, max_iter)
        if not report.converged:
            logger.warning("inner GMRES: %s", report.message)
            notes.append(f"inner GMRES: {report.message}")
        return report

    return solve


def gmres_refine_lse(
    problem: LseProblem,
    config: RefinementConfig | None = None,
    precond_kind: GmresPrecond | str = GmresPrecond.BD,
    alpha_scale: float = 1.0,
) -> tuple[LseState, RefinementTrace]:
    """Outer refinement with each correction solved by preconditioned GMRES.

    B and d are scaled by beta = ||A||_F / ||B||_F before factorization;
    the multiplier is unscaled on return.  alpha = alpha_scale * ||r0||.
    """
    config = config or RefinementConfig()
    precond_kind = GmresPrecond(precond_kind)
    timer = PhaseTimer()
    notes: list[str] = []

    with timer.phase("other"):
        beta = problem.norms.a_fro / problem.norms.b_fro if problem.norms.b_fro > 0 else 1.0
        scaled = LseProblem(problem.A, beta * problem.B, problem.b, beta * problem.d)
    with timer.phase("factorization"):
        factors, a_stored, a_scale = factorize_lse(scaled, config.factor_level)
    with timer.phase("init"):
        state = lse_direct(factors, scaled.b, scaled.d)
        state.r = initial_residual(scaled, a_stored, a_scale, state.x)
        state.v = solve_v(factors, scaled.A, state.r, config.residual_level)
    with timer.phase("other"):
        alpha = _alpha(float(np.linalg.norm(state.r)), alpha_scale)
        op = AugmentedOperator(ProblemKind.LSE, scaled, alpha)
        precond = _LSE_BUILDERS[precond_kind](factors, alpha)
        solve = _inner_solver(config, op, precond, notes)
    m, n, p = scaled.dims

    def residuals():
        return lse_residuals(scaled, state, config.residual_level)

    def bounds():
        return lse_bounds(scaled.norms, state.norms())

    def correct(fs) -> int:
        f1, f2, f3 = fs
        report = solve(np.concatenate([f1, f2, f3 / alpha]))
        s1, s2, s3 = _split3(report.solution, (m, p, n))
        state.r = state.r + alpha * s1
        state.v = state.v - alpha * s2
        state.x = state.x + s3
        return report.iterations

    trace = refine(residuals, bounds, correct, config, timer, correction_phase="gmres",
                   label=f"gmres-{precond_kind.value} lse")
    trace.notes.extend(notes)
    trace.timings = timer.snapshot()
    return LseState(x=state.x, r=state.r, v=beta * state.v), trace


def gmres_refine_gls(
    problem: GlsProblem,
    config: RefinementConfig | None = None,
    precond_kind: GmresPrecond | str = GmresPrecond.BD,
    alpha_scale: float = 1.0,
) -> tuple[GlsState, RefinementTrace]:
    """GLS counterpart: W is scaled by beta = ||V||_F / ||W||_F, alpha = alpha_scale * ||y0||."""
    config = config or RefinementConfig()
    precond_kind = GmresPrecond(precond_kind)
    timer = PhaseTimer()
    notes: list[str] = []

    with timer.phase("other"):
        beta = problem.norms.v_fro / problem.norms.w_fro if problem.norms.w_fro > 0 else 1.0
        scaled = GlsProblem(beta * problem.W, problem.V, problem.d)
    with timer.phase("factorization"):
        factors = factorize_gls(scaled, config.factor_level)
    with timer.phase("init"):
        state = gls_direct(factors, scaled.d)
        state.z = init_z(factors, state.y)
    with timer.phase("other"):
        alpha = _alpha(float(np.linalg.norm(state.y)), alpha_scale)
        op = AugmentedOperator(ProblemKind.GLS, scaled, alpha)
        precond = _GLS_BUILDERS[precond_kind](factors, alpha)
        solve = _inner_solver(config, op, precond, notes)
    n, m, p = scaled.dims

    def residuals():
        return gls_residuals(scaled, state, config.residual_level)

    def bounds():
        return gls_bounds(scaled.norms, state.norms())

    def correct(fs) -> int:
        f1, f2, f3 = fs
        report = solve(np.concatenate([alpha * f1, f2, alpha * f3]))
        s1, s2, s3 = _split3(report.solution, (p, n, m))
        state.y = state.y + s1
        state.z = state.z - s2 / alpha
        state.x = state.x + s3
        return report.iterations

    trace = refine(residuals, bounds, correct, config, timer, correction_phase="gmres",
                   label=f"gmres-{precond_kind.value} gls")
    trace.notes.extend(notes)
    trace.timings = timer.snapshot()
    return GlsState(x=beta * state.x, y=state.y, z=state.z), trace


# ---------------------------------------------------------------------------
# Spectrum of the ideally preconditioned matrix
# ---------------------------------------------------------------------------

CUBIC_ROOTS = tuple(sorted(float(r) for r in np.roots([1.0, -1.0, -2.0, 1.0]).real))
GOLDEN_PAIR = ((1.0 - math.sqrt(5.0)) / 2.0, (1.0 + math.sqrt(5.0)) / 2.0)
KAPPA_BOUND = 1.0 + 2.0 * CUBIC_ROOTS[2] / CUBIC_ROOTS[1]


def spectrum_multiplicities(kind: ProblemKind | str, dims: tuple[int, int, int]) -> dict[str, int]:
    """Multiplicity of each factor of the characteristic polynomial.

    cubic: roots of x^3 - x^2 - 2x + 1, golden: roots of x^2 - x - 1,
    one: the eigenvalue 1 alone, plus_minus_one: the pair {1, -1}.
    """
    kind = ProblemKind(kind)
    if kind is ProblemKind.LSE:
        m, n, p = dims
        return {
            "cubic": p - max(0, n - m),
            "golden": n - p,
            "one": max(m - n, 0),
            "plus_minus_one": max(n - m, 0),
        }
    n, m, p = dims
    return {
        "cubic": m if n <= p else p - n + m,
        "golden": n - m,
        "one": max(p - n, 0),
        "plus_minus_one": max(n - p, 0),
    }


def expected_spectrum(kind: ProblemKind | str, dims: tuple[int, int, int]) -> np.ndarray:
    mult = spectrum_multiplicities(kind, dims)
    values = (
        list(CUBIC_ROOTS) * mult["cubic"]
        + list(GOLDEN_PAIR) * mult["golden"]
        + [1.0] * mult["one"]
        + [1.0, -1.0] * mult["plus_minus_one"]
    )
    return np.sort(np.array(values))


@dataclass
class SpectrumReport:
    kind: ProblemKind
    dims: tuple[int, int, int]
    eigenvalues: np.ndarray
    expected: np.ndarray
    max_deviation: float
    sigma_max: float
    sigma_min: float
    multiplicities: dict[str, int] = field(default_factory=dict)

    @property
    def condition(self) -> float:
        return self.sigma_max / self.sigma_min


def spectrum_check(
    kind: ProblemKind | str,
    dims: tuple[int, int, int],
    seed: int = 0,
    alpha: float = 1.0,
    tol: float = 1e-8,
) -> SpectrumReport:
    """Eigenvalues of M_l F M_r built from exact binary64 factors.

    F is assembled from the matrices the factors reconstruct, so the
    preconditioned matrix is the ideal one up to roundoff.
    """
    kind = ProblemKind(kind)
    rng = np.random.default_rng(seed)
    if kind is ProblemKind.LSE:
        m, n, p = dims
        factors = grq(rng.standard_normal((p, n)), rng.standard_normal((m, n)))
        q = to_dense(factors.q)
        a = to_dense(factors.z) @ factors.t @ q
        b = np.hstack([np.zeros((p, n - p)), factors.r]) @ q
        problem = LseProblem(a, b, np.zeros(m), np.zeros(p))
        precond = build_bd_precond_lse(factors, alpha)
    else:
        n, m, p = dims
        factors = gqr(rng.standard_normal((n, m)), rng.standard_normal((n, p)))
        q = to_dense(factors.q)
        w = q @ np.vstack([factors.r, np.zeros((n - m, m))])
        v = q @ factors.t @ to_dense(factors.z)
        problem = GlsProblem(w, v, np.zeros(n))
        precond = build_bd_precond_gls(factors, alpha)

    x = preconditioned_matrix(AugmentedOperator(kind, problem, alpha), precond)
    eigenvalues = np.linalg.eigvalsh((x + x.T) / 2.0)
    expected = expected_spectrum(kind, dims)
    deviations = np.abs(eigenvalues - expected)
    worst = int(np.argmax(deviations))
    report = SpectrumReport(
        kind=kind,
        dims=tuple(dims),
        eigenvalues=eigenvalues,
        expected=expected,
        max_deviation=float(deviations[worst]),
        sigma_max=float(np.max(np.abs(eigenvalues))),
        sigma_min=float(np.min(np.abs(eigenvalues))),
        multiplicities=spectrum_multiplicities(kind, dims),
    )
    if report.max_deviation > tol:
        raise SpectrumMismatch(float(eigenvalues[worst]), f"expected {expected[worst]:.12g} for {kind.value} {dims}")
    return report
