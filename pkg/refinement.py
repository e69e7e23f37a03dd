"""
Outer refinement loop shared by the classical and GMRES-based drivers.

Exports:
  Status             : outcome of a refinement run
  RefinementConfig   : tolerance, iteration cap, precisions, inner GMRES settings
  RefinementTrace    : per-run record (residual history, counts, timings, notes)
  PhaseTimer         : wall-clock accounting per phase label
  DivergenceMonitor  : running-minimum growth detector
  within_bounds      : inclusive componentwise stop test
  refine             : the loop itself

The drivers in lse, gls and krylov supply three callbacks (residuals, bounds,
correct) and own their state; this module never touches the iterates.
"""

from __future__ import annotations

import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from errors import InvalidInput
from precision import PrecisionConfig, PrecisionLevel

logger = logging.getLogger(__name__)

PHASES = ("factorization", "init", "residual", "correction", "gmres", "other")


class Status(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    DIVERGED = "diverged"
    FAILED = "failed"


@dataclass(frozen=True)
class RefinementConfig:
    tol: float = 1e-13
    maxit: int = 40
    precisions: PrecisionConfig = field(default_factory=PrecisionConfig)
    divergence_ratio: float = 1e4
    inner_tol: float = 1e-6
    inner_max_iter: int | None = None  # None: dimension of the augmented system

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidInput(f"tol must be positive, got {self.tol}")
        if self.maxit < 1:
            raise InvalidInput(f"maxit must be >= 1, got {self.maxit}")
        if not self.divergence_ratio > 1:
            raise InvalidInput(f"divergence_ratio must exceed 1, got {self.divergence_ratio}")
        if not 0 < self.inner_tol < 1:
            raise InvalidInput(f"inner_tol must lie in (0, 1), got {self.inner_tol}")
        if self.inner_max_iter is not None and self.inner_max_iter < 1:
            raise InvalidInput(f"inner_max_iter must be >= 1, got {self.inner_max_iter}")

    @classmethod
    def from_settings(cls, settings, **overrides) -> RefinementConfig:
        """Build from a loaded config.Settings; keyword arguments win."""
        values = dict(
            tol=settings.tol,
            maxit=settings.maxit,
            precisions=PrecisionConfig.from_names(*settings.precisions),
            divergence_ratio=settings.divergence_ratio,
            inner_tol=settings.inner_tol,
            inner_max_iter=settings.inner_max_iter,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def factor_level(self) -> PrecisionLevel:
        return self.precisions.factor

    @property
    def solve_level(self) -> PrecisionLevel:
        return self.precisions.solve

    @property
    def residual_level(self) -> PrecisionLevel:
        return self.precisions.residual


@dataclass
class RefinementTrace:
    status: Status = Status.MAX_ITERATIONS
    corrections: int = 0
    residual_history: list[tuple[float, float, float]] = field(default_factory=list)
    inner_iterations: int = 0
    timings: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        """Residual evaluations performed (== len(residual_history))."""
        return len(self.residual_history)


class PhaseTimer:
    """Accumulates monotonic wall-clock seconds per phase label."""

    def __init__(self):
        self.seconds = {name: 0.0 for name in PHASES}

    @contextmanager
    def phase(self, name: str):
        if name not in self.seconds:
            raise InvalidInput(f"unknown phase {name!r}")
        start = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] += time.perf_counter() - start

    def snapshot(self) -> dict[str, float]:
        return dict(self.seconds)


class DivergenceMonitor:
    def __init__(self, ratio: float = 1e4):
        self.ratio = ratio
        self.best = math.inf

    def update(self, scaled: float) -> bool:
        """True once `scaled` is non-finite or ratio times its running minimum."""
        if not math.isfinite(scaled):
            return True
        self.best = min(self.best, scaled)
        return scaled > 0 and scaled >= self.ratio * self.best


def within_bounds(norms: Sequence[float], bounds: Sequence[float], tol: float) -> bool:
    return all(f <= tol * b for f, b in zip(norms, bounds))


def _scaled_max(norms: Sequence[float], bounds: Sequence[float]) -> float:
    worst = 0.0
    for f, b in zip(norms, bounds):
        if not math.isfinite(f) or not math.isfinite(b):
            return math.inf
        if b > 0:
            worst = max(worst, f / b)
        elif f > 0:
            return math.inf
    return worst


def refine(
    residuals: Callable[[], tuple[np.ndarray, np.ndarray, np.ndarray]],
    bounds: Callable[[], tuple[float, float, float]],
    correct: Callable[[tuple[np.ndarray, np.ndarray, np.ndarray]], int],
    config: RefinementConfig,
    timer: PhaseTimer,
    correction_phase: str = "correction",
    label: str = "refine",
) -> RefinementTrace:
    """Evaluate, test, correct; at most config.maxit residual evaluations.

    `correct` applies one update to the caller's state and returns the
    number of inner iterations it spent (0 for a direct correction solve).
    No correction follows the final evaluation.
    """
    trace = RefinementTrace()
    monitor = DivergenceMonitor(config.divergence_ratio)
    for it in range(config.maxit):
        with timer.phase("residual"):
            fs = residuals()
            norms = tuple(float(np.linalg.norm(f)) for f in fs)
            bnds = bounds()
        trace.residual_history.append(norms)
        logger.debug("%s iter %d: |f| = %.3e %.3e %.3e", label, it, *norms)

        if within_bounds(norms, bnds, config.tol):
            trace.status = Status.CONVERGED
            break
        if monitor.update(_scaled_max(norms, bnds)):
            trace.status = Status.DIVERGED
            logger.warning("%s diverged after %d corrections", label, trace.corrections)
            break
        if it == config.maxit - 1:
            break

        with timer.phase(correction_phase):
            trace.inner_iterations += correct(fs)
        trace.corrections += 1

    if trace.status is Status.MAX_ITERATIONS:
        trace.notes.append(f"stopping criteria not met in {config.maxit} residual evaluations")
    logger.info(
        "%s: %s after %d evaluations (%d inner)",
        label, trace.status.value, trace.iterations, trace.inner_iterations,
    )
    return trace
