"""Householder QR/RQ, GRQ/GQR and the triangular and matvec kernels."""

from fractions import Fraction

import numpy as np
import pytest

from errors import DimensionError, InvalidInput, SingularTriangular
from factor import (
    HouseholderFactor,
    apply_orthogonal,
    gemv,
    gqr,
    grq,
    qr,
    rq,
    to_dense,
    trsv,
)
from harness import factor_backward_errors
from krylov import ProblemKind
from precision import PrecisionLevel, demote_matrix

EPS_LOW = 2.0**-24
EPS_WORKING = 2.0**-53


def _orthogonality(h: HouseholderFactor) -> float:
    q = to_dense(h).astype(np.float64)
    return float(np.linalg.norm(q.T @ q - np.eye(h.dim)))


# ---------------------------------------------------------------------------
# QR and RQ
# ---------------------------------------------------------------------------

def test_qr_identity():
    h, r = qr(np.eye(3))
    np.testing.assert_allclose(np.abs(np.diag(r)), np.ones(3))
    assert _orthogonality(h) <= 1e-14


def test_qr_column_norm():
    _, r = qr(np.array([[3.0], [4.0]]))
    assert abs(abs(r[0, 0]) - 5.0) <= 1e-15
    assert r[1, 0] == 0.0


def test_qr_reconstruction(rng):
    a = rng.standard_normal((20, 8))
    h, r = qr(a)
    assert r.shape == a.shape
    assert np.all(np.tril(r, -1) == 0)
    assert np.linalg.norm(a - to_dense(h) @ r) / np.linalg.norm(a) <= 1e-14


def test_qr_rejects_empty():
    with pytest.raises(DimensionError):
        qr(np.zeros((0, 3)))


def test_rq_already_in_form():
    r, h = rq(np.array([[0.0, 1.0]]))
    assert abs(abs(r[0, 0]) - 1.0) <= 1e-15
    assert _orthogonality(h) <= 1e-15


def test_rq_identity():
    r, _ = rq(np.eye(4))
    np.testing.assert_allclose(np.abs(np.diag(r)), np.ones(4), atol=1e-15)


def test_rq_reconstruction(rng):
    b = rng.standard_normal((4, 10))
    r, h = rq(b)
    assert r.shape == (4, 4)
    assert np.all(np.tril(r, -1) == 0)
    rebuilt = np.hstack([np.zeros((4, 6)), r]) @ to_dense(h)
    assert np.linalg.norm(b - rebuilt) / np.linalg.norm(b) <= 1e-14


def test_rq_rejects_tall():
    with pytest.raises(DimensionError):
        rq(np.ones((5, 3)))


@pytest.mark.parametrize("dtype, eps", [(np.float64, EPS_WORKING), (np.float32, EPS_LOW)])
def test_orthogonality_bound(rng, dtype, eps):
    a = rng.standard_normal((30, 12)).astype(dtype)
    h, _ = qr(a)
    assert _orthogonality(h) <= 50 * h.dim * eps
    _, g = rq(a.T)
    assert _orthogonality(g) <= 50 * g.dim * eps


# ---------------------------------------------------------------------------
# apply_orthogonal
# ---------------------------------------------------------------------------

def test_identity_factor_leaves_vector():
    v = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(apply_orthogonal(HouseholderFactor.identity(3), v), v)


def test_apply_preserves_norm_and_roundtrips(rng):
    h, _ = qr(rng.standard_normal((15, 7)))
    for _ in range(5):
        v = rng.standard_normal(15)
        hv = apply_orthogonal(h, v)
        assert abs(np.linalg.norm(hv) - np.linalg.norm(v)) <= 1e-14 * np.linalg.norm(v)
        back = apply_orthogonal(h, apply_orthogonal(h, v, transpose=True))
        assert np.linalg.norm(back - v) <= 1e-13 * np.linalg.norm(v)


def test_apply_matches_dense(rng):
    _, g = rq(rng.standard_normal((3, 9)))
    v = rng.standard_normal((9, 2))
    dense = to_dense(g)
    np.testing.assert_allclose(apply_orthogonal(g, v), dense @ v, atol=1e-13)
    np.testing.assert_allclose(apply_orthogonal(g, v, transpose=True), dense.T @ v, atol=1e-13)


def test_apply_length_mismatch(rng):
    h, _ = qr(rng.standard_normal((5, 2)))
    with pytest.raises(DimensionError):
        apply_orthogonal(h, np.ones(4))


# ---------------------------------------------------------------------------
# trsv and gemv
# ---------------------------------------------------------------------------

def test_trsv_hand_example():
    x = trsv(np.array([[2.0, 1.0], [0.0, 4.0]]), np.array([4.0, 8.0]))
    np.testing.assert_allclose(x, [1.0, 2.0])


def test_trsv_identity():
    b = np.array([3.0, -1.0, 0.5])
    np.testing.assert_array_equal(trsv(np.eye(3), b), b)


def test_trsv_unit_diagonal_residual(rng):
    t = np.triu(rng.standard_normal((16, 16)) * 0.1, 1) + np.eye(16)
    b = rng.standard_normal(16)
    x = trsv(t, b)
    assert np.linalg.norm(t @ x - b) / np.linalg.norm(b) <= 1e-14
    y = trsv(t, b, transpose=True)
    assert np.linalg.norm(t.T @ y - b) / np.linalg.norm(b) <= 1e-14


def test_trsv_zero_diagonal_reports_index():
    t = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 3.0]])
    with pytest.raises(SingularTriangular) as info:
        trsv(t, np.ones(3), block="R")
    assert info.value.index == 1
    assert info.value.block == "R"


def test_gemv_basic(rng):
    a = rng.standard_normal((4, 3))
    np.testing.assert_array_equal(gemv(a, np.zeros(3)), np.zeros(4))
    e = np.zeros(3)
    e[1] = 1.0
    np.testing.assert_array_equal(gemv(a, e), a[:, 1])
    np.testing.assert_allclose(gemv(a, np.ones(4), transpose=True), a.sum(axis=0))


def test_gemv_extended_cancellation():
    a = np.array([[1e16, 1.0, -1e16], [1.0, 1e-20, -1.0]])
    x = np.ones(3)
    got = gemv(a, x, accumulation=PrecisionLevel.EXTENDED)
    for row, value in zip(a, got):
        exact = sum(Fraction(float(v)) for v in row)
        assert abs(Fraction(float(value)) - exact) <= abs(exact) * Fraction(1, 10**25) + Fraction(2.0**-1074)


def test_gemv_dimension_mismatch():
    with pytest.raises(DimensionError):
        gemv(np.ones((2, 3)), np.ones(2))


# ---------------------------------------------------------------------------
# GRQ and GQR
# ---------------------------------------------------------------------------

def test_grq_identity_case():
    n, p = 5, 2
    b = np.hstack([np.zeros((p, n - p)), np.eye(p)])
    f = grq(b, np.eye(n))
    np.testing.assert_allclose(np.abs(np.diag(f.r)), np.ones(p), atol=1e-15)
    np.testing.assert_allclose(np.abs(f.t), np.eye(n), atol=1e-15)


def test_gqr_identity_case():
    n, m = 5, 2
    w = np.vstack([np.eye(m), np.zeros((n - m, m))])
    f = gqr(w, np.eye(n))
    np.testing.assert_allclose(np.abs(np.diag(f.r)), np.ones(m), atol=1e-15)
    np.testing.assert_allclose(np.abs(f.t), np.eye(n), atol=1e-14)


@pytest.mark.parametrize("level, eps", [(PrecisionLevel.LOW, EPS_LOW), (PrecisionLevel.WORKING, EPS_WORKING)])
def test_grq_backward_error(level, eps):
    for seed in range(5):
        err_b, err_a = factor_backward_errors(ProblemKind.LSE, (12, 8, 3), seed, level)
        assert err_b <= 100 * eps
        assert err_a <= 100 * eps


@pytest.mark.parametrize("level, eps", [(PrecisionLevel.LOW, EPS_LOW), (PrecisionLevel.WORKING, EPS_WORKING)])
def test_gqr_backward_error(level, eps):
    for seed in range(5):
        err_w, err_v = factor_backward_errors(ProblemKind.GLS, (10, 4, 8), seed, level)
        assert err_w <= 100 * eps
        assert err_v <= 100 * eps


def test_grq_structure(rng):
    f = grq(rng.standard_normal((3, 8)), rng.standard_normal((12, 8)))
    assert (f.m, f.n, f.p) == (12, 8, 3)
    assert f.r.shape == (3, 3) and np.all(np.tril(f.r, -1) == 0)
    assert f.t.shape == (12, 8) and np.all(np.tril(f.t, -1) == 0)
    assert f.t11.shape == (5, 5) and f.t12.shape == (5, 3) and f.t22.shape == (7, 3)


def test_gqr_structure_when_n_exceeds_p(rng):
    f = gqr(rng.standard_normal((10, 4)), rng.standard_normal((10, 7)))
    assert f.split == 1
    assert f.t22.shape == (6, 6)
    assert np.all(np.tril(f.t22, -1) == 0)
    assert np.all(f.t[4:, :1] == 0)


def test_low_factors_keep_scales_and_promote(rng):
    b, a = rng.standard_normal((3, 8)) * 1e3, rng.standard_normal((12, 8)) * 1e-2
    f = grq(demote_matrix(b), demote_matrix(a))
    assert f.level is PrecisionLevel.LOW
    assert f.scale_b == np.max(np.abs(b)) and f.scale_a == np.max(np.abs(a))
    g = f.astype(PrecisionLevel.WORKING)
    assert g.level is PrecisionLevel.WORKING and g.scale_a == g.scale_b == 1.0
    rebuilt = np.hstack([np.zeros((3, 5)), g.r]) @ to_dense(g.q)
    assert np.linalg.norm(b - rebuilt) / np.linalg.norm(b) <= 100 * EPS_LOW
    with pytest.raises(InvalidInput):
        g.astype(PrecisionLevel.LOW)


def test_grq_dimension_errors(rng):
    with pytest.raises(DimensionError):
        grq(rng.standard_normal((5, 4)), rng.standard_normal((3, 4)))  # p > n
    with pytest.raises(DimensionError):
        grq(rng.standard_normal((1, 6)), rng.standard_normal((2, 6)))  # n > m + p
    with pytest.raises(DimensionError):
        gqr(rng.standard_normal((3, 4)), rng.standard_normal((3, 2)))  # m > n


def test_mixed_precision_operands_rejected(rng):
    with pytest.raises(InvalidInput):
        grq(rng.standard_normal((2, 4)).astype(np.float32), rng.standard_normal((5, 4)))
