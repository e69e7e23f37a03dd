"""
Runtime settings loaded from config.yaml.

Exports:
  Settings       : frozen view of the yaml file
  load_settings  : parse a config file (defaults to the repository's)
  SETTINGS       : settings loaded at import time
  thread_limit   : worker cap for the experiment runner
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from errors import InvalidInput, ReportIOError

MODEL_DIR = Path(__file__).resolve().parent
CONFIG_PATH = MODEL_DIR / "config.yaml"


@dataclass(frozen=True)
class Settings:
    tol: float = 1e-13
    maxit: int = 40
    divergence_ratio: float = 1e4
    precisions: tuple[str, str, str, str] = ("low", "low", "working", "working")
    inner_tol: float = 1e-6
    inner_max_iter: int | None = None
    seed: int = 20240601
    suites_path: Path = MODEL_DIR / "benchmark" / "suites.json"
    threads_env: str = "MIXEDLS_THREADS"


def load_settings(path: str | Path = CONFIG_PATH) -> Settings:
    path = Path(path)
    try:
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InvalidInput(f"malformed config {path}: {exc}") from exc

    refinement = raw.get("refinement", {})
    precisions = raw.get("precisions", {})
    gmres = raw.get("gmres", {})
    experiments = raw.get("experiments", {})
    runner = raw.get("runner", {})
    defaults = Settings()

    suites = experiments.get("suites")
    return Settings(
        tol=float(refinement.get("tol", defaults.tol)),
        maxit=int(refinement.get("maxit", defaults.maxit)),
        divergence_ratio=float(refinement.get("divergence_ratio", defaults.divergence_ratio)),
        precisions=tuple(
            str(precisions.get(key, default))
            for key, default in zip(("factor", "solve", "working", "residual"), defaults.precisions)
        ),
        inner_tol=float(gmres.get("inner_tol", defaults.inner_tol)),
        inner_max_iter=gmres.get("inner_max_iter", defaults.inner_max_iter),
        seed=int(experiments.get("seed", defaults.seed)),
        suites_path=(path.parent / suites) if suites else defaults.suites_path,
        threads_env=str(runner.get("threads_env", defaults.threads_env)),
    )


def thread_limit(settings: Settings | None = None) -> int:
    """Value of the threads environment variable, at least 1; cpu count if unset."""
    settings = settings or SETTINGS
    value = os.environ.get(settings.threads_env, "").strip()
    if not value:
        return os.cpu_count() or 1
    try:
        return max(1, int(value))
    except ValueError as exc:
        raise InvalidInput(f"{settings.threads_env} must be an integer, got {value!r}") from exc


SETTINGS = load_settings()
