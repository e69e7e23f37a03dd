"""Generator, metrics, experiments, suites, dense oracles and the validation suites.

The desk-scale table runs are marked slow.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

import harness
from errors import DimensionError, InvalidInput, SingularTriangular
from harness import (
    Distribution,
    GeneratorSpec,
    Method,
    VALIDATORS,
    forward_error,
    forward_error_ceiling,
    gen_problem,
    kkt_solve,
    metric_er2_gls,
    metric_err1_lse,
    metric_err2_lse,
    mixed_condition,
    run_experiment,
    run_sweep,
    singular_values,
    state_vector,
    suite_cells,
)
from gls import mpgls
from krylov import AugmentedOperator, ProblemKind, augmented_matrix
from lse import LseProblem, LseState, mplse
from precision import PrecisionConfig, PrecisionLevel, extended_gemv
from refinement import RefinementConfig, Status

CASES = json.loads((Path(__file__).parent / "test-cases.json").read_text())


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------

def test_singular_values():
    np.testing.assert_array_equal(singular_values(5, 1.0), np.ones(5))
    geo = singular_values(4, 1e6)
    assert geo[0] == 1.0 and geo[-1] == pytest.approx(1e-6, rel=1e-12)
    np.testing.assert_allclose(geo[1:] / geo[:-1], 1e-2, rtol=1e-12)
    lin = singular_values(3, 4.0, Distribution.ARITHMETIC)
    np.testing.assert_allclose(lin, [1.0, 0.625, 0.25])
    np.testing.assert_array_equal(singular_values(1, 1e8), [1.0])


def test_generator_is_deterministic():
    spec = GeneratorSpec("lse", (20, 8, 3), 1e4, seed=42)
    a, b = gen_problem(spec), gen_problem(spec)
    np.testing.assert_array_equal(a.A, b.A)
    np.testing.assert_array_equal(a.d, b.d)
    c = gen_problem(GeneratorSpec("lse", (20, 8, 3), 1e4, seed=43))
    assert not np.array_equal(a.A, c.A)


@pytest.mark.parametrize("kind, dims", [("lse", (30, 10, 4)), ("gls", (10, 4, 30))])
@pytest.mark.parametrize("cond", [1.0, 1e3, 1e7])
def test_generator_hits_condition(kind, dims, cond):
    problem = gen_problem(GeneratorSpec(kind, dims, cond, seed=1))
    if kind == "lse":
        assert problem.dims == dims
        stacked = np.vstack([problem.A, problem.B])
    else:
        assert problem.dims == dims
        stacked = np.hstack([problem.W, problem.V])
    assert np.linalg.cond(stacked) == pytest.approx(cond, rel=1e-2)


def test_arithmetic_distribution():
    problem = gen_problem(GeneratorSpec("lse", (16, 6, 2), 1e2, seed=0, distribution="arithmetic"))
    sv = np.linalg.svd(np.vstack([problem.A, problem.B]), compute_uv=False)
    np.testing.assert_allclose(sv, np.linspace(1.0, 1e-2, 6), atol=1e-12)


@pytest.mark.parametrize("kwargs, error", [
    ({"kind": "lse", "dims": (10, 4, 5), "cond": 10.0}, DimensionError),
    ({"kind": "gls", "dims": (3, 4, 5), "cond": 10.0}, DimensionError),
    ({"kind": "lse", "dims": (10, 4), "cond": 10.0}, DimensionError),
    ({"kind": "lse", "dims": (10, 4, 2), "cond": 0.5}, InvalidInput),
    ({"kind": "lse", "dims": (10, 4, 2), "cond": math.inf}, InvalidInput),
])
def test_generator_spec_validation(kwargs, error):
    with pytest.raises(error):
        GeneratorSpec(**kwargs)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        GeneratorSpec("qr", (10, 4, 2), 10.0)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def test_metric_identities():
    problem = LseProblem(np.eye(2), np.array([[1.0, 0.0]]), np.array([1.0, 1.0]), np.array([2.0]))
    x = np.array([2.0, 1.0])
    assert metric_err1_lse(problem, x) == 0.0
    assert metric_err2_lse(problem, x, x) == 0.0
    y = np.array([3.0, -4.0])
    assert metric_er2_gls(y, y) == 0.0
    assert metric_er2_gls(2 * y, y) == pytest.approx(1.0)


def test_metric_zero_denominators():
    problem = LseProblem(np.eye(2), np.zeros((1, 2)), np.zeros(2), np.zeros(1))
    assert metric_err1_lse(problem, np.zeros(2)) == 0.0
    assert metric_err2_lse(problem, np.zeros(2), np.zeros(2)) == 0.0
    assert metric_err2_lse(problem, np.ones(2), np.zeros(2)) == math.inf
    assert metric_er2_gls(np.zeros(3), np.zeros(3)) == 0.0
    assert metric_er2_gls(np.ones(3), np.zeros(3)) == math.inf
    assert metric_er2_gls(np.array([np.nan]), np.ones(1)) == math.inf


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def test_direct_method_scores_itself():
    report = run_experiment(GeneratorSpec("lse", (30, 12, 4), 1e3, seed=3), "direct")
    assert report.status is Status.CONVERGED
    assert report.metrics["err-2"] == 0.0
    assert report.metrics["err-1"] <= 1e-14
    assert report.iterations == 0


@pytest.mark.parametrize("kind, dims", [("lse", (40, 16, 4)), ("gls", (16, 4, 40))])
@pytest.mark.parametrize("method", ["ir", "gmres-inverse", "gmres-bd"])
def test_run_experiment_small(kind, dims, method):
    report = run_experiment(GeneratorSpec(kind, dims, 1e3, seed=2), method)
    assert report.converged
    first, second = report.metrics.values()
    assert first <= 1e-13
    assert second <= 1e-9
    record = report.to_record()
    assert record["kind"] == kind and record["method"] == method
    assert record["status"] == "converged"
    assert list(record["dims"]) == list(dims)
    assert set(record["phase_timings"]) >= {"factorization", "residual"}
    assert report.relative_time is None or report.relative_time > 0


@pytest.mark.parametrize("kind, dims, method", [("lse", (30, 12, 4), "ir"), ("gls", (16, 4, 40), "gmres-bd")])
def test_same_seed_gives_identical_reports(kind, dims, method):
    spec = GeneratorSpec(kind, dims, 1e5, seed=11)
    first, second = run_experiment(spec, method), run_experiment(spec, method)
    assert first.status is second.status
    assert first.iterations == second.iterations
    assert first.inner_iterations == second.inner_iterations
    for name, value in first.metrics.items():
        assert np.float64(value).tobytes() == np.float64(second.metrics[name]).tobytes()


def test_solver_errors_become_failed_reports(monkeypatch):
    def broken(problem, config):
        raise SingularTriangular(0, "R")

    monkeypatch.setattr(harness, "mplse", broken)
    report = run_experiment(GeneratorSpec("lse", (20, 8, 3), 10.0), "ir")
    assert report.status is Status.FAILED
    assert all(math.isinf(v) for v in report.metrics.values())
    assert "SingularTriangular" in report.message
    assert report.to_record()["status"] == "failed"


def test_run_sweep_keeps_input_order():
    cells = [
        (GeneratorSpec("lse", (20, 8, 3), cond, seed=1), Method(method))
        for cond in (10.0, 1e3)
        for method in ("direct", "ir")
    ]
    seen = []
    reports = run_sweep(cells, max_workers=3, on_done=lambda done, total: seen.append((done, total)))
    assert [(r.spec, r.method) for r in reports] == cells
    assert seen[-1] == (4, 4) and len(seen) == 4


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def test_repository_desk_suites():
    lse = suite_cells("paper-lse", "desk")
    assert len(lse) == 12
    assert {spec.dims for spec, _ in lse} == {(2048, 256, 8)}
    assert {m for _, m in lse} == {Method.IR, Method.GMRES_INVERSE, Method.GMRES_BD}
    gls = suite_cells("paper-gls", "desk")
    assert {spec.dims for spec, _ in gls} == {(256, 8, 2048)}
    assert {spec.cond for spec, _ in gls} == {1e3, 1e5, 1e7}


def test_table_names_are_aliases():
    assert suite_cells("table-lse", "desk") == suite_cells("paper-lse", "desk")
    assert suite_cells("table-gls", "full") == suite_cells("paper-gls", "full")


def test_shape_rule_groups():
    suites = {
        "tiny-lse": {"kind": "lse", "methods": ["ir"], "desk": [
            {"n": [64], "big_factor": [2], "small_divisor": [8, 4], "conds": [10]},
        ]},
        "tiny-gls": {"kind": "gls", "methods": ["ir"], "desk": [
            {"n": [64], "big_factor": [2], "small_divisor": [8], "conds": [10, 100]},
        ]},
    }
    lse = suite_cells("tiny-lse", suites=suites, seed=5)
    assert [spec.dims for spec, _ in lse] == [(128, 64, 8), (128, 64, 16)]
    assert all(spec.seed == 5 for spec, _ in lse)
    gls = suite_cells("tiny-gls", suites=suites)
    assert [spec.dims for spec, _ in gls] == [(64, 8, 128), (64, 8, 128)]


def test_unknown_suite_or_scale():
    with pytest.raises(InvalidInput):
        suite_cells("no-such-suite")
    with pytest.raises(InvalidInput):
        suite_cells("paper-lse", "huge")


# ---------------------------------------------------------------------------
# Dense oracles and forward error
# ---------------------------------------------------------------------------

def test_kkt_solve_matches_least_squares():
    problem = gen_problem(GeneratorSpec("lse", (20, 8, 3), 1e2, seed=4))
    u = kkt_solve(ProblemKind.LSE, problem)
    x = u[20 + 3:]
    assert np.linalg.norm(problem.B @ x - problem.d) <= 1e-13 * np.linalg.norm(problem.d)
    # x minimises ||Ax - b|| over the affine set
    null = np.linalg.svd(problem.B)[2][3:].T
    grad = null.T @ problem.A.T @ (problem.A @ x - problem.b)
    assert np.linalg.norm(grad) <= 1e-12 * np.linalg.norm(problem.b)


def test_forward_error_ceiling_value():
    u = 2.0**-53
    assert forward_error_ceiling((1, 1, 1), 1.0, PrecisionLevel.WORKING) == pytest.approx(10 * (16 * u + u))


@pytest.mark.parametrize("kind, dims", [("lse", (30, 12, 4)), ("gls", (12, 4, 30))])
@pytest.mark.parametrize("cond", [10.0, 1e2, 1e3, 1e4])
@pytest.mark.parametrize("residual", ["working", "extended"])
def test_forward_error_within_ceiling(kind, dims, cond, residual):
    problem = gen_problem(GeneratorSpec(kind, dims, cond, seed=6))
    exact = kkt_solve(kind, problem)
    config = RefinementConfig(
        tol=1e-300, maxit=15,
        precisions=PrecisionConfig.from_names("low", "low", "working", residual),
    )
    state, trace = (mplse if kind == "lse" else mpgls)(problem, config)
    assert trace.status is not Status.DIVERGED
    mixed = mixed_condition(kind, problem, exact)
    assert mixed >= 1.0
    ceiling = forward_error_ceiling(problem.dims, mixed, PrecisionLevel(residual))
    assert forward_error(kind, state, exact) <= ceiling


def test_kkt_solve_refines_to_working_accuracy():
    problem = gen_problem(GeneratorSpec("lse", (30, 12, 4), 1e7, seed=6))
    u = kkt_solve(ProblemKind.LSE, problem)
    f = augmented_matrix(AugmentedOperator(ProblemKind.LSE, problem, 1.0))
    rhs = np.concatenate([problem.b, problem.d, np.zeros(12)])
    # one more step moves the solution by rounding only
    delta = np.linalg.solve(f, extended_gemv([(f, -u)], offsets=[rhs]))
    assert np.linalg.norm(delta) <= 1e-15 * np.linalg.norm(u)


@pytest.mark.parametrize("factor", ["low", "working"])
def test_extended_residuals_beat_working_residuals_when_ill_conditioned(factor):
    cond = 1e7 if factor == "low" else 1e5
    problem = gen_problem(GeneratorSpec("lse", (30, 12, 4), cond, seed=6))
    exact = kkt_solve(ProblemKind.LSE, problem)
    errors = {}
    for residual in ("working", "extended"):
        config = RefinementConfig(
            tol=1e-300, maxit=30,
            precisions=PrecisionConfig.from_names(factor, factor, "working", residual),
        )
        state, _ = mplse(problem, config)
        errors[residual] = forward_error(ProblemKind.LSE, state, exact)
    assert errors["extended"] * 10 <= errors["working"]


def test_state_vector_layout():
    state = LseState(x=np.array([1.0]), r=np.array([2.0, 3.0]), v=np.array([4.0]))
    np.testing.assert_array_equal(state_vector("lse", state), [2.0, 3.0, -4.0, 1.0])


# ---------------------------------------------------------------------------
# Validation suites
# ---------------------------------------------------------------------------

def test_spectrum_suite_passes():
    results = VALIDATORS["spectrum"]()
    assert len(results) == 6
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_precond_suite_passes():
    results = harness.validate_precond(seeds=2)
    assert all(r.passed for r in results), [r for r in results if not r.passed]


def test_factor_suite_passes():
    results = harness.validate_factor(seeds=2)
    assert len(results) == 4
    assert all(r.passed for r in results), [r for r in results if not r.passed]


# ---------------------------------------------------------------------------
# Desk-scale tables
# ---------------------------------------------------------------------------

LSE_DESK = CASES["lse_desk"]
GLS_DESK = CASES["gls_desk"]


@pytest.mark.slow
@pytest.mark.parametrize("case", LSE_DESK["cases"], ids=lambda c: f"cond={c['cond']:.0e}")
def test_lse_desk_table(case):
    spec = GeneratorSpec("lse", LSE_DESK["dims"], case["cond"], LSE_DESK["seed"])
    report = run_experiment(spec, "ir")
    assert report.converged, report.message
    assert report.iterations <= case["max_iterations"]
    assert report.metrics["err-1"] <= case["err-1"]
    assert report.metrics["err-2"] <= case["err-2"]


@pytest.mark.slow
def test_lse_desk_ill_conditioned_does_not_converge():
    spec = GeneratorSpec("lse", LSE_DESK["dims"], LSE_DESK["failing_cond"], LSE_DESK["seed"])
    report = run_experiment(spec, "ir")
    assert report.status in (Status.DIVERGED, Status.MAX_ITERATIONS)


@pytest.mark.slow
@pytest.mark.parametrize("case", GLS_DESK["cases"], ids=lambda c: f"cond={c['cond']:.0e}")
def test_gls_desk_table(case):
    spec = GeneratorSpec("gls", GLS_DESK["dims"], case["cond"], GLS_DESK["seed"])
    report = run_experiment(spec, "ir")
    assert report.converged, report.message
    assert report.iterations <= case["max_iterations"]
    for name in ("er-1", "er-2"):
        if name in case:
            assert report.metrics[name] <= case[name]


@pytest.mark.slow
def test_gmres_rescues_ill_conditioned_lse():
    rescue = CASES["gmres_rescue"]
    spec = GeneratorSpec("lse", LSE_DESK["dims"], rescue["cond"], LSE_DESK["seed"])
    report = run_experiment(spec, "gmres-bd")
    assert report.converged, report.message
    assert report.metrics["err-1"] <= rescue["err-1"]
    assert report.inner_iterations <= rescue["max_inner_iterations"]
