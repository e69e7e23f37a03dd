"""
Experiment reports and dense Matrix Market files.

Exports:
  CSV_FIELDS            : fixed CSV header
  write_report          : JSON array or CSV table of experiment reports
  read_matrix_market    : `%%MatrixMarket matrix array real general` reader
  write_matrix_market   : writer for the same form (scipy.io)

Reports are anything with a `to_record()` returning the nested JSON
record; the CSV form flattens dims, metrics and timings into columns.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np
import scipy.io

from errors import InvalidInput, ParseError, ReportIOError
from refinement import PHASES

logger = logging.getLogger(__name__)

MM_HEADER = "%%MatrixMarket matrix array real general"

CSV_FIELDS = (
    "kind", "dims", "cond", "seed", "distribution", "method", "status",
    "metric_1_name", "metric_1", "metric_2_name", "metric_2",
    "iterations", "corrections", "inner_iterations", "relative_time",
    *(f"time_{phase}" for phase in PHASES),
    "message",
)


class Reportable(Protocol):
    def to_record(self) -> dict: ...


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _csv_row(record: dict) -> dict:
    (name1, value1), (name2, value2) = record["metrics"].items()
    row = {
        "kind": record["kind"],
        "dims": "x".join(str(d) for d in record["dims"]),
        "cond": record["cond"],
        "seed": record["seed"],
        "distribution": record["distribution"],
        "method": record["method"],
        "status": record["status"],
        "metric_1_name": name1,
        "metric_1": value1,
        "metric_2_name": name2,
        "metric_2": value2,
        "iterations": record["iterations"],
        "corrections": record["corrections"],
        "inner_iterations": record["inner_iterations"],
        "relative_time": "" if record["relative_time"] is None else record["relative_time"],
        "message": record["message"],
    }
    for phase in PHASES:
        row[f"time_{phase}"] = record["phase_timings"].get(phase, 0.0)
    return row


def write_report(reports: Iterable[Reportable], fmt: str, path: str | Path) -> None:
    """Write `reports` as a JSON array (fmt="json") or a CSV table (fmt="csv")."""
    fmt = fmt.lower()
    if fmt not in ("json", "csv"):
        raise InvalidInput(f"unknown report format {fmt!r}; expected json or csv")
    records = [r.to_record() for r in reports]
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            if fmt == "json":
                json.dump(records, f, indent=2, default=str)
                f.write("\n")
            else:
                writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
                writer.writeheader()
                for record in records:
                    writer.writerow(_csv_row(record))
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc}") from exc
    logger.info("wrote %d report(s) to %s", len(records), path)


# ---------------------------------------------------------------------------
# Matrix Market, dense array form
# ---------------------------------------------------------------------------

_MM_LINE = re.compile(r"line\s+(\d+)", re.IGNORECASE)


def write_matrix_market(matrix, path: str | Path) -> None:
    """Dense `array real general` file through scipy.io.mmwrite."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise InvalidInput(f"expected a matrix, got an array of shape {a.shape}")
    try:
        with open(path, "wb") as f:
            scipy.io.mmwrite(f, a, field="real", symmetry="general")
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}") from exc


def read_matrix_market(path: str | Path) -> np.ndarray:
    """Read a dense `array real general` file; malformed input raises ParseError."""
    try:
        with open(path, "rb") as f:
            banner = f.readline().decode("ascii", errors="replace").strip()
            if banner.lower().split() != MM_HEADER.lower().split():
                raise ParseError(f"expected header {MM_HEADER!r}, got {banner!r}", 1)
            f.seek(0)
            data = scipy.io.mmread(f)
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        match = _MM_LINE.search(str(exc))
        line = int(match.group(1)) if match else _line_count(path) + 1
        raise ParseError(str(exc), line) from exc
    return np.asarray(data, dtype=np.float64)


def _line_count(path: str | Path) -> int:
    with open(path, "rb") as f:
        return sum(1 for _ in f)
