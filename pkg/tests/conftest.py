"""Shared fixtures for the solver tests."""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

MODEL_DIR = Path(__file__).resolve().parent.parent
if str(MODEL_DIR) not in sys.path:
    sys.path.insert(0, str(MODEL_DIR))

TESTS_DIR  = Path(__file__).resolve().parent
CASES_PATH = TESTS_DIR / "test-cases.json"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale table runs (deselect with -m 'not slow')")


@pytest.fixture(scope="session")
def table_cases():
    """Iteration and accuracy expectations for the desk-scale tables."""
    with open(CASES_PATH) as f:
        return json.load(f)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def lse_problem(rng):
    """Small well-conditioned LSE instance, (m, n, p) = (12, 8, 3)."""
    from lse import LseProblem
    return LseProblem(
        rng.standard_normal((12, 8)),
        rng.standard_normal((3, 8)),
        rng.standard_normal(12),
        rng.standard_normal(3),
    )


@pytest.fixture
def gls_problem(rng):
    """Small well-conditioned GLS instance, (n, m, p) = (10, 4, 9)."""
    from gls import GlsProblem
    return GlsProblem(
        rng.standard_normal((10, 4)),
        rng.standard_normal((10, 9)),
        rng.standard_normal(10),
    )
