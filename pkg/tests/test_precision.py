"""Precision levels, scaled demotion and double-double accumulation."""

from fractions import Fraction

import numpy as np
import pytest

from errors import DimensionError, InvalidInput
from precision import (
    PrecisionConfig,
    PrecisionLevel,
    ScaledLowVector,
    demote_matrix,
    demote_parts,
    demote_vector,
    extended_dot,
    extended_gemv,
    promote_parts,
    promote_vector,
    two_prod,
    two_sum,
)


def _exact_dot(x, y) -> Fraction:
    return sum((Fraction(float(a)) * Fraction(float(b)) for a, b in zip(x, y)), Fraction(0))


# ---------------------------------------------------------------------------
# Levels and configs
# ---------------------------------------------------------------------------

def test_unit_roundoffs_are_ordered():
    assert PrecisionLevel.LOW.unit_roundoff == 2.0**-24
    assert PrecisionLevel.WORKING.unit_roundoff == 2.0**-53
    assert PrecisionLevel.LOW.unit_roundoff > PrecisionLevel.WORKING.unit_roundoff > PrecisionLevel.EXTENDED.unit_roundoff


@pytest.mark.parametrize("name, level", [
    ("single", PrecisionLevel.LOW),
    ("float64", PrecisionLevel.WORKING),
    ("Double-Double", PrecisionLevel.EXTENDED),
    ("low", PrecisionLevel.LOW),
])
def test_parse_aliases(name, level):
    assert PrecisionLevel.parse(name) is level


def test_parse_unknown_level():
    with pytest.raises(InvalidInput):
        PrecisionLevel.parse("half")


def test_default_config_is_single_single_double_double():
    cfg = PrecisionConfig()
    assert (cfg.factor, cfg.solve, cfg.working, cfg.residual) == (
        PrecisionLevel.LOW, PrecisionLevel.LOW, PrecisionLevel.WORKING, PrecisionLevel.WORKING,
    )


def test_config_rejects_unordered_chain():
    with pytest.raises(InvalidInput):
        PrecisionConfig.from_names("working", "low", "working", "working")
    with pytest.raises(InvalidInput):
        PrecisionConfig.from_names("low", "low", "working", "low")


def test_config_requires_binary64_working():
    with pytest.raises(InvalidInput):
        PrecisionConfig.from_names("low", "low", "low", "low")


# ---------------------------------------------------------------------------
# Demotion
# ---------------------------------------------------------------------------

def test_demote_zero_vector():
    w = demote_vector(np.zeros(3))
    assert w.scale == 1.0
    assert w.data.dtype == np.float32
    assert np.all(w.data == 0)


def test_demote_avoids_binary32_overflow():
    w = demote_vector([1e200, -2e200])
    assert w.scale == 2e200
    assert np.all(np.isfinite(w.data))
    assert list(w.data) == [0.5, -1.0]


def test_demote_three_four_within_unit_roundoff():
    v = np.array([3.0, 4.0])
    back = promote_vector(demote_vector(v))
    for exact, approx in zip(v, back):
        err = abs(Fraction(float(approx)) - Fraction(float(exact))) / Fraction(float(exact))
        assert err <= Fraction(1, 2**24)


def test_promote_is_exact_widening():
    w = ScaledLowVector(data=np.array([0.5, -1.0], dtype=np.float32), scale=2.0)
    assert list(promote_vector(w)) == [1.0, -2.0]


def test_roundtrip_property(rng):
    for _ in range(20):
        v = rng.standard_normal(50) * 10.0 ** rng.integers(-30, 30)
        back = promote_vector(demote_vector(v))
        assert np.all(np.abs(back - v) <= 2.0**-24 * np.abs(v) * (1 + 1e-12))


def test_demote_rejects_non_finite():
    with pytest.raises(InvalidInput):
        demote_vector([1.0, np.nan])
    with pytest.raises(InvalidInput):
        demote_matrix(np.array([[np.inf]]))


def test_demote_matrix_uses_one_scale(rng):
    a = rng.standard_normal((5, 4))
    a[2, 3] = -40.0
    w = demote_matrix(a)
    assert w.scale == 40.0
    assert w.data.dtype == np.float32
    assert w.shape == (5, 4)


def test_demote_parts_shares_scale_and_stays_linear():
    parts = [np.array([1.0, 2.0]), np.array([-8.0]), np.array([0.5, 0.25, 4.0])]
    low, s = demote_parts(parts, PrecisionLevel.LOW)
    assert s == 8.0
    assert [p.size for p in low] == [2, 1, 3]
    assert all(p.dtype == np.float32 for p in low)
    back = promote_parts(low, s)
    for a, b in zip(parts, back):
        np.testing.assert_array_equal(a, b)


def test_demote_parts_is_identity_above_low():
    parts = [np.array([1.0, 3.0]), np.array([2.0])]
    same, s = demote_parts(parts, PrecisionLevel.WORKING)
    assert s == 1.0
    assert all(p.dtype == np.float64 for p in same)


# ---------------------------------------------------------------------------
# Double-double kernels
# ---------------------------------------------------------------------------

def test_two_sum_and_two_prod_are_error_free():
    a, b = 1e16, 1.0
    s, e = two_sum(a, b)
    assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)
    x, y = 1.0 + 2.0**-30, 1.0 - 2.0**-29
    p, e = two_prod(x, y)
    assert Fraction(p) + Fraction(e) == Fraction(x) * Fraction(y)


def test_extended_dot_cancellation():
    x = np.array([1e16, 1.0, -1e16])
    y = np.ones(3)
    assert float(np.dot(np.array([1e16, 1.0]), np.ones(2)) - 1e16) == 0.0
    assert extended_dot(x, y) == 1.0


@pytest.mark.parametrize("x, y, expected", [
    ([1.0, 0.0], [1.0, 0.0], 1.0),
    ([1.0, 2.0, 3.0], [4.0, 5.0, 6.0], 32.0),
])
def test_extended_dot_trivial(x, y, expected):
    assert extended_dot(x, y) == expected


def test_extended_dot_length_mismatch():
    with pytest.raises(DimensionError):
        extended_dot([1.0, 2.0], [1.0])


def test_extended_dot_matches_rational_oracle(rng):
    for _ in range(10):
        x = rng.standard_normal(40) * 10.0 ** rng.integers(-8, 8, size=40)
        y = rng.standard_normal(40)
        # force heavy cancellation
        x = np.concatenate([x, -x[:20]])
        y = np.concatenate([y, y[:20] * (1 + 2.0**-40)])
        exact = _exact_dot(x, y)
        got = Fraction(extended_dot(x, y))
        scale = sum((abs(Fraction(float(a)) * Fraction(float(b))) for a, b in zip(x, y)), Fraction(0))
        assert abs(got - exact) <= abs(exact) * Fraction(2.0**-52) + scale * Fraction(2.0**-100)


def test_extended_dot_agrees_with_naive_without_cancellation(rng):
    x = np.abs(rng.standard_normal(200))
    y = np.abs(rng.standard_normal(200))
    naive = float(x @ y)
    assert abs(extended_dot(x, y) - naive) <= 2.0**-50 * naive


def test_extended_gemv_offsets_enter_exactly():
    a = np.array([[1e16, 1.0], [2.0, 3.0]])
    x = np.array([1.0, 1.0])
    out = extended_gemv([(a, x)], offsets=[np.array([-1e16, -5.0])])
    np.testing.assert_array_equal(out, [1.0, 0.0])


def test_extended_gemv_shape_errors():
    with pytest.raises(DimensionError):
        extended_gemv([(np.eye(2), np.ones(3))])
    with pytest.raises(DimensionError):
        extended_gemv([])
