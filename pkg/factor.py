"""
Dense Householder factorizations and the kernels that consume them.

Exports:
  HouseholderFactor       : compact orthogonal factor (reflectors + tau)
  qr, rq                  : single-matrix factorizations
  grq, gqr                : generalized factorizations of (B, A) and (W, V)
  GrqFactors, GqrFactors  : their results, with demotion scales attached
  apply_orthogonal        : H v or H^T v without forming H
  to_dense                : explicit H, for validation only
  trsv, gemv              : triangular solve and matvec at a chosen precision

Everything runs at the dtype of the inputs: float32 operands give a
factorization at u_f = 2^-24, float64 operands one at 2^-53.  No sign
normalisation is applied to the triangular factors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from errors import DimensionError, InvalidInput, SingularTriangular
from precision import PrecisionLevel, ScaledLowMatrix, extended_gemv


# ---------------------------------------------------------------------------
# Orthogonal factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HouseholderFactor:
    """Product of k reflectors P_j = I - tau_j v_j v_j^T of order `dim`.

    Row j of `vectors` holds v_j, nonzero only on starts[j]:stops[j].
    side == "left"  (from QR):  H = P_0 P_1 ... P_{k-1}
    side == "right" (from RQ):  H = P_{k-1} ... P_1 P_0
    """

    vectors: np.ndarray
    tau: np.ndarray
    starts: np.ndarray
    stops: np.ndarray
    side: str
    dim: int

    @property
    def count(self) -> int:
        return len(self.tau)

    @property
    def dtype(self):
        return self.vectors.dtype

    def astype(self, dtype) -> HouseholderFactor:
        return replace(self, vectors=self.vectors.astype(dtype), tau=self.tau.astype(dtype))

    @classmethod
    def identity(cls, dim: int, dtype=np.float64) -> HouseholderFactor:
        return cls(
            vectors=np.zeros((0, dim), dtype=dtype),
            tau=np.zeros(0, dtype=dtype),
            starts=np.zeros(0, dtype=int),
            stops=np.zeros(0, dtype=int),
            side="left",
            dim=dim,
        )


def _reflector(x: np.ndarray, pivot: int) -> tuple[np.ndarray, np.generic, np.generic]:
    """Reflector mapping x onto beta * e_pivot, LAPACK xLARFG conventions.

    Returns (v, tau, beta) with v[pivot] = 1.  When x is already a multiple
    of e_pivot, tau = 0 and the reflector is the identity.
    """
    dtype = x.dtype.type
    alpha = x[pivot]
    rest = np.concatenate([x[:pivot], x[pivot + 1:]])
    sigma = np.linalg.norm(rest) if rest.size else dtype(0)
    v = np.zeros_like(x)
    v[pivot] = 1
    if sigma == 0:
        return v, dtype(0), alpha
    beta = -np.copysign(np.hypot(alpha, sigma), alpha)
    tau = (beta - alpha) / beta
    v = x / (alpha - beta)
    v[pivot] = 1
    return v, dtype(tau), dtype(beta)


def _as_operand(m) -> tuple[np.ndarray, float]:
    if isinstance(m, ScaledLowMatrix):
        return m.data, m.scale
    arr = np.asarray(m)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    return arr, 1.0


def _check_finite(a: np.ndarray, name: str):
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")


def qr(a) -> tuple[HouseholderFactor, np.ndarray]:
    """A = H R with R upper trapezoidal of the same shape as A."""
    a, _ = _as_operand(a)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"qr needs a non-empty matrix, got shape {a.shape}")
    _check_finite(a, "qr operand")
    rows, cols = a.shape
    k = min(rows, cols)
    r = a.copy()
    vectors = np.zeros((k, rows), dtype=a.dtype)
    tau = np.zeros(k, dtype=a.dtype)
    for j in range(k):
        v, t, beta = _reflector(r[j:, j], 0)
        if t != 0:
            block = r[j:, j + 1:]
            block -= t * np.outer(v, v @ block)
        r[j, j] = beta
        r[j + 1:, j] = 0
        vectors[j, j:] = v
        tau[j] = t
    factor = HouseholderFactor(
        vectors=vectors,
        tau=tau,
        starts=np.arange(k),
        stops=np.full(k, rows),
        side="left",
        dim=rows,
    )
    return factor, r


def _rq_general(b: np.ndarray) -> tuple[np.ndarray, HouseholderFactor]:
    """B = T H, eliminating rows bottom-up with reflectors from the right.

    For rows <= cols, T = [0, R] with R upper triangular.  For rows > cols
    the top rows - cols rows of T stay dense above an upper triangle.
    """
    rows, cols = b.shape
    k = min(rows, cols)
    t = b.copy()
    vectors = np.zeros((k, cols), dtype=b.dtype)
    tau = np.zeros(k, dtype=b.dtype)
    stops = np.zeros(k, dtype=int)
    for j in range(k):
        i = rows - 1 - j
        c = cols - 1 - j
        v, tj, beta = _reflector(t[i, :c + 1], c)
        if tj != 0 and i > 0:
            block = t[:i, :c + 1]
            block -= tj * np.outer(block @ v, v)
        t[i, c] = beta
        t[i, :c] = 0
        vectors[j, :c + 1] = v
        tau[j] = tj
        stops[j] = c + 1
    factor = HouseholderFactor(
        vectors=vectors,
        tau=tau,
        starts=np.zeros(k, dtype=int),
        stops=stops,
        side="right",
        dim=cols,
    )
    return t, factor


def rq(b) -> tuple[np.ndarray, HouseholderFactor]:
    """B = [0, R] H with R square upper triangular (rows <= cols)."""
    b, _ = _as_operand(b)
    if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
        raise DimensionError(f"rq needs a non-empty matrix, got shape {b.shape}")
    rows, cols = b.shape
    if rows > cols:
        raise DimensionError(f"rq needs rows <= cols, got {rows}x{cols}")
    _check_finite(b, "rq operand")
    t, factor = _rq_general(b)
    return t[:, cols - rows:].copy(), factor


def apply_orthogonal(h: HouseholderFactor, v, transpose: bool = False) -> np.ndarray:
    """H v (or H^T v) for a vector or a matrix of column vectors."""
    v = np.asarray(v)
    if v.ndim not in (1, 2) or v.shape[0] != h.dim:
        raise DimensionError(f"orthogonal factor of order {h.dim} applied to shape {v.shape}")
    out = np.array(v, dtype=np.result_type(v, h.vectors), copy=True)
    forward = (h.side == "left") == transpose
    order = range(h.count) if forward else range(h.count - 1, -1, -1)
    for j in order:
        t = h.tau[j]
        if t == 0:
            continue
        s, e = h.starts[j], h.stops[j]
        w = h.vectors[j, s:e]
        seg = out[s:e]
        seg -= t * np.multiply.outer(w, w @ seg)
    return out


def to_dense(h: HouseholderFactor) -> np.ndarray:
    return apply_orthogonal(h, np.eye(h.dim, dtype=h.dtype))


# ---------------------------------------------------------------------------
# Triangular solves and matvecs
# ---------------------------------------------------------------------------

def trsv(t, b, transpose: bool = False, block: str = "") -> np.ndarray:
    """Solve T x = b (or T^T x = b) for upper triangular T.

    Works at the common dtype of T and b.  `block` names the factor in the
    SingularTriangular message.
    """
    t = np.asarray(t)
    b = np.asarray(b)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or b.shape[0] != t.shape[0]:
        raise DimensionError(f"triangular solve with {t.shape} and rhs {b.shape}")
    if t.shape[0] == 0:
        return np.zeros(b.shape, dtype=np.result_type(t, b))
    zeros = np.flatnonzero(np.diag(t) == 0)
    if zeros.size:
        raise SingularTriangular(int(zeros[0]), block)
    return scipy.linalg.solve_triangular(
        t, b, trans="T" if transpose else "N", lower=False, check_finite=False
    )


def gemv(
    a,
    x,
    transpose: bool = False,
    accumulation: PrecisionLevel = PrecisionLevel.WORKING,
) -> np.ndarray:
    a = np.asarray(a)
    x = np.asarray(x)
    op = a.T if transpose else a
    if op.ndim != 2 or x.ndim != 1 or op.shape[1] != x.shape[0]:
        raise DimensionError(f"matvec of shapes {op.shape} and {x.shape}")
    if accumulation is PrecisionLevel.EXTENDED:
        return extended_gemv([(op, x)])
    dtype = accumulation.dtype
    return op.astype(dtype, copy=False) @ x.astype(dtype, copy=False)


# ---------------------------------------------------------------------------
# Generalized factorizations
# ---------------------------------------------------------------------------

def _level_of(dtype) -> PrecisionLevel:
    return PrecisionLevel.LOW if dtype == np.float32 else PrecisionLevel.WORKING


@dataclass(frozen=True)
class GrqFactors:
    """B/scale_b = [0, R] Q and A/scale_a = Z T Q.

    R is p x p upper triangular, T is m x n upper trapezoidal.  With
    T = [[T11, T12], [0, T22]] the leading block T11 is (n-p) x (n-p).
    """

    q: HouseholderFactor
    r: np.ndarray
    z: HouseholderFactor
    t: np.ndarray
    m: int
    n: int
    p: int
    scale_a: float = 1.0
    scale_b: float = 1.0

    @property
    def level(self) -> PrecisionLevel:
        return _level_of(self.r.dtype)

    @property
    def t11(self) -> np.ndarray:
        return self.t[: self.n - self.p, : self.n - self.p]

    @property
    def t12(self) -> np.ndarray:
        return self.t[: self.n - self.p, self.n - self.p:]

    @property
    def t22(self) -> np.ndarray:
        return self.t[self.n - self.p:, self.n - self.p:]

    def astype(self, level: PrecisionLevel) -> GrqFactors:
        """Promote to binary64, folding the demotion scales into R and T."""
        if level is PrecisionLevel.LOW:
            if self.level is PrecisionLevel.LOW:
                return self
            raise InvalidInput("factors can only be promoted")
        if self.level is not PrecisionLevel.LOW and self.scale_a == 1.0 and self.scale_b == 1.0:
            return self
        return replace(
            self,
            q=self.q.astype(np.float64),
            z=self.z.astype(np.float64),
            r=self.scale_b * self.r.astype(np.float64),
            t=self.scale_a * self.t.astype(np.float64),
            scale_a=1.0,
            scale_b=1.0,
        )


@dataclass(frozen=True)
class GqrFactors:
    """W/scale_w = Q [R; 0] and V/scale_v = Q T Z.

    R is m x m upper triangular and T is n x p.  Splitting rows at m and
    columns at p-n+m gives T = [[T11, T12], [0, T22]] with T22 upper
    triangular of order n-m.
    """

    q: HouseholderFactor
    r: np.ndarray
    z: HouseholderFactor
    t: np.ndarray
    n: int
    m: int
    p: int
    scale_w: float = 1.0
    scale_v: float = 1.0

    @property
    def level(self) -> PrecisionLevel:
        return _level_of(self.r.dtype)

    @property
    def split(self) -> int:
        return self.p - self.n + self.m

    @property
    def t11(self) -> np.ndarray:
        return self.t[: self.m, : self.split]

    @property
    def t12(self) -> np.ndarray:
        return self.t[: self.m, self.split:]

    @property
    def t22(self) -> np.ndarray:
        return self.t[self.m:, self.split:]

    def astype(self, level: PrecisionLevel) -> GqrFactors:
        if level is PrecisionLevel.LOW:
            if self.level is PrecisionLevel.LOW:
                return self
            raise InvalidInput("factors can only be promoted")
        if self.level is not PrecisionLevel.LOW and self.scale_w == 1.0 and self.scale_v == 1.0:
            return self
        return replace(
            self,
            q=self.q.astype(np.float64),
            z=self.z.astype(np.float64),
            r=self.scale_w * self.r.astype(np.float64),
            t=self.scale_v * self.t.astype(np.float64),
            scale_w=1.0,
            scale_v=1.0,
        )


def grq(b, a) -> GrqFactors:
    """GRQ factorization of (B, A); accepts arrays or ScaledLowMatrix."""
    b, scale_b = _as_operand(b)
    a, scale_a = _as_operand(a)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("grq needs two matrices")
    m, n = a.shape
    p = b.shape[0]
    if b.shape[1] != n:
        raise DimensionError(f"A has {n} columns but B has {b.shape[1]}")
    if not (1 <= p <= n <= m + p):
        raise DimensionError(f"grq needs p <= n <= m + p, got (m, n, p) = ({m}, {n}, {p})")
    if a.dtype != b.dtype:
        raise InvalidInput(f"A and B differ in precision ({a.dtype} vs {b.dtype})")
    _check_finite(a, "A")
    r, q = rq(b)
    aqt = apply_orthogonal(q, a.T).T
    z, t = qr(aqt)
    return GrqFactors(q=q, r=r, z=z, t=t, m=m, n=n, p=p, scale_a=scale_a, scale_b=scale_b)


def gqr(w, v) -> GqrFactors:
    """GQR factorization of (W, V); accepts arrays or ScaledLowMatrix."""
    w, scale_w = _as_operand(w)
    v, scale_v = _as_operand(v)
    if w.ndim != 2 or v.ndim != 2:
        raise DimensionError("gqr needs two matrices")
    n, m = w.shape
    p = v.shape[1]
    if v.shape[0] != n:
        raise DimensionError(f"W has {n} rows but V has {v.shape[0]}")
    if not (1 <= m <= n <= m + p):
        raise DimensionError(f"gqr needs m <= n <= m + p, got (n, m, p) = ({n}, {m}, {p})")
    if w.dtype != v.dtype:
        raise InvalidInput(f"W and V differ in precision ({w.dtype} vs {v.dtype})")
    _check_finite(v, "V")
    q, r_full = qr(w)
    qtv = apply_orthogonal(q, v, transpose=True)
    t, z = _rq_general(qtv)
    return GqrFactors(
        q=q, r=r_full[:m].copy(), z=z, t=t, n=n, m=m, p=p, scale_w=scale_w, scale_v=scale_v
    )
