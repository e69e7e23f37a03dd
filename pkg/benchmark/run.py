#!/usr/bin/env python3
"""
Benchmark: mixed precision LSE / GLS solvers.

Subcommands:
  bench      : one generated problem, one method; prints the metrics table
  sweep      : a suite of (dims, cond, method) cells in the accuracy-table layout
  validate   : property suites (spectrum, precond, factor), pass/fail

Usage:
    python benchmark/run.py bench lse --m 2048 --n 256 --p 8 --cond 1e5 --method ir
    python benchmark/run.py bench gls --n 256 --m 8 --p 2048 --method gmres-bd --out results.csv --format csv
    python benchmark/run.py sweep --suite paper-lse --scale desk --out benchmark/results/lse.json
    python benchmark/run.py validate --suite spectrum

Exit codes: 0 success; 1 when the bench run did not converge (diverged,
ran out of iterations or failed; the report is still written) or a check
failed (validate); 2 usage error.
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from config import SETTINGS
from errors import MixedLsError, ReportIOError
from harness import (
    VALIDATORS,
    CheckResult,
    ExperimentReport,
    SUITE_ALIASES,
    GeneratorSpec,
    Method,
    load_suites,
    run_experiment,
    run_sweep,
    suite_cells,
)
from krylov import ProblemKind
from refinement import PHASES, RefinementConfig
from reports import write_report

DESK_DIMS = {
    ProblemKind.LSE: {"m": 2048, "n": 256, "p": 8},
    ProblemKind.GLS: {"n": 256, "m": 8, "p": 2048},
}

W = 80


# ═══════════════════════════════════════════════════════════════
# Reporting
# ═══════════════════════════════════════════════════════════════

def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.2e}"
    return str(value)


def _print_bench(report: ExperimentReport):
    spec = report.spec
    print("\n" + "=" * W)
    print(f"  {spec.kind.value.upper()} {report.method.value}  : dims {spec.dims}, cond {spec.cond:.0e}")
    print("=" * W)

    print(f"\n  {'Metric':<30} {'Value':>12}")
    print("  " + "-" * 44)
    print(f"  {'Status':<30} {report.status.value:>12}")
    for name, value in report.metrics.items():
        print(f"  {name:<30} {value:>12.3e}")
    print(f"  {'Residual evaluations':<30} {report.iterations:>12}")
    print(f"  {'Corrections':<30} {report.corrections:>12}")
    print(f"  {'Inner GMRES iterations':<30} {report.inner_iterations:>12}")
    print(f"  {'Relative time (vs direct)':<30} {_fmt(report.relative_time):>12}")

    print(f"\n  {'Phase':<20} {'Seconds':>12}")
    print("  " + "-" * 34)
    for phase in PHASES:
        print(f"  {phase:<20} {report.phase_timings.get(phase, 0.0):>12.4f}")

    if report.message:
        print(f"\n  NOTES: {report.message}")
    print("\n" + "=" * W)


def _print_sweep(name: str, reports: list[ExperimentReport]):
    print("\n" + "=" * W)
    print(f"  SWEEP {name}  : {len(reports)} runs")
    print("=" * W)

    by_dims: dict[tuple, list[ExperimentReport]] = {}
    for r in reports:
        by_dims.setdefault(r.spec.dims, []).append(r)

    for dims, group in by_dims.items():
        conds = sorted({r.spec.cond for r in group})
        methods = list(dict.fromkeys(r.method for r in group))
        cells = {(r.method, r.spec.cond): r for r in group}
        metric_names = list(group[0].metrics)

        print(f"\n  dims {dims}")
        header = "".join(f"{'cond=' + format(c, '.0e'):>12}" for c in conds)
        print(f"  {'Method':<14} {'Row':<8}{header}")
        print("  " + "-" * (23 + 12 * len(conds)))
        for method in methods:
            rows = [("iters", lambda r: r.iterations)]
            rows += [(m, lambda r, m=m: r.metrics[m]) for m in metric_names]
            if method is not Method.IR and method is not Method.DIRECT:
                rows.append(("inner", lambda r: r.inner_iterations))
            for i, (label, get) in enumerate(rows):
                values = []
                for c in conds:
                    r = cells.get((method, c))
                    if r is None:
                        values.append(f"{'':>12}")
                    elif label == "iters" and not r.converged:
                        values.append(f"{r.status.value[:11]:>12}")
                    else:
                        values.append(f"{_fmt(get(r)):>12}")
                print(f"  {method.value if i == 0 else '':<14} {label:<8}{''.join(values)}")

    failures = [r for r in reports if not r.converged]
    if failures:
        print(f"\n  NOT CONVERGED ({len(failures)}):")
        for r in failures:
            print(f"    [{r.status.value:>14}]  {r.method.value:<14} {str(r.spec.dims):<18} cond={r.spec.cond:.0e}  {r.message[:40]}")
    print("\n" + "=" * W)


def _print_checks(suite: str, results: list[CheckResult]):
    print("\n" + "=" * W)
    print(f"  VALIDATE {suite}")
    print("=" * W)
    print(f"\n  {'Check':<40} {'Value':>11} {'Limit':>11}  Result")
    print("  " + "-" * 72)
    for c in results:
        print(f"  {c.name[:40]:<40} {c.value:>11.3e} {c.limit:>11.3e}  {'pass' if c.passed else 'FAIL'}")

    failures = [c for c in results if not c.passed]
    if failures:
        print(f"\n  FAILURES ({len(failures)}):")
        for c in failures:
            print(f"    {c.name}  {c.detail}")
    print(f"\n  {len(results) - len(failures)}/{len(results)} passed")
    print("\n" + "=" * W)


def _progress(current: int, total: int):
    pct    = current / total if total else 0
    filled = int(30 * pct)
    bar    = "█" * filled + "░" * (30 - filled)
    print(f"\r  [{bar}] {current}/{total}", end="", flush=True)


def _format_for(out: Path, fmt: str | None) -> str:
    if fmt:
        return fmt
    return "csv" if out.suffix.lower() == ".csv" else "json"


# ═══════════════════════════════════════════════════════════════
# Subcommands
# ═══════════════════════════════════════════════════════════════

def _config(args) -> RefinementConfig:
    return RefinementConfig.from_settings(
        SETTINGS,
        tol=getattr(args, "tol", None),
        maxit=getattr(args, "maxit", None),
    )


def cmd_bench(args, parser) -> int:
    kind = ProblemKind(args.kind)
    desk = DESK_DIMS[kind]
    m, n, p = (args.m or desk["m"]), (args.n or desk["n"]), (args.p or desk["p"])
    dims = (m, n, p) if kind is ProblemKind.LSE else (n, m, p)
    try:
        spec = GeneratorSpec(kind, dims, args.cond, args.seed)
        config = _config(args)
    except MixedLsError as exc:
        parser.error(str(exc))

    report = run_experiment(spec, Method(args.method), config)
    _print_bench(report)
    if args.out:
        out = Path(args.out)
        write_report([report], _format_for(out, args.format), out)
        print(f"Report saved to {out}")
    return 0 if report.converged else 1


def cmd_sweep(args, parser) -> int:
    try:
        cells = suite_cells(args.suite, args.scale, args.seed, load_suites())
        config = _config(args)
    except MixedLsError as exc:
        parser.error(str(exc))

    print(f"Suite {args.suite} ({args.scale}): {len(cells)} runs\n")
    reports = run_sweep(cells, config, on_done=_progress)
    print()  # newline after progress bar

    _print_sweep(args.suite, reports)
    if args.out:
        out = Path(args.out)
        write_report(reports, _format_for(out, args.format), out)
        print(f"Results saved to {out}")
    return 0


def cmd_validate(args, parser) -> int:
    results = VALIDATORS[args.suite]()
    _print_checks(args.suite, results)
    return 0 if all(c.passed for c in results) else 1


# ═══════════════════════════════════════════════════════════════
# Main
# ═══════════════════════════════════════════════════════════════

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="count", default=0,
                        help="-v for driver outcomes, -vv for per-iteration residuals")

    parser = argparse.ArgumentParser(description="Mixed precision LSE / GLS benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser(
        "bench", parents=[common], help="Run one method on one generated problem",
        epilog="Exits 1 unless the run converged: divergence, the iteration limit and "
               "solver failures all count. The report is written either way.",
    )
    bench.add_argument("kind", choices=[k.value for k in ProblemKind])
    bench.add_argument("--m", type=int, help="Rows of A (LSE) or columns of W (GLS)")
    bench.add_argument("--n", type=int, help="Columns of A (LSE) or rows of W (GLS)")
    bench.add_argument("--p", type=int, help="Rows of B (LSE) or columns of V (GLS)")
    bench.add_argument("--cond", type=float, default=1e5, help="Target 2-norm condition of the stacked matrix (default: 1e5)")
    bench.add_argument("--seed", type=int, default=SETTINGS.seed, help=f"Generator seed (default: {SETTINGS.seed})")
    bench.add_argument("--method", choices=[m.value for m in Method], default=Method.IR.value)
    bench.add_argument("--tol", type=float, default=SETTINGS.tol, help=f"Stopping tolerance (default: {SETTINGS.tol:g})")
    bench.add_argument("--maxit", type=int, default=SETTINGS.maxit, help=f"Residual evaluations (default: {SETTINGS.maxit})")
    bench.add_argument("--out", type=str, help="Write the report to this file")
    bench.add_argument("--format", choices=["json", "csv"], help="Report format (default: from --out suffix)")
    bench.set_defaults(handler=cmd_bench)

    sweep = sub.add_parser("sweep", parents=[common], help="Reproduce an accuracy table")
    sweep.add_argument("--suite", required=True, choices=sorted([*load_suites(), *SUITE_ALIASES]))
    sweep.add_argument("--scale", choices=["desk", "full"], default="desk")
    sweep.add_argument("--seed", type=int, default=SETTINGS.seed)
    sweep.add_argument("--out", type=str, help="Write all reports to this file")
    sweep.add_argument("--format", choices=["json", "csv"])
    sweep.set_defaults(handler=cmd_sweep)

    validate = sub.add_parser("validate", parents=[common], help="Run a property suite")
    validate.add_argument("--suite", required=True, choices=sorted(VALIDATORS))
    validate.set_defaults(handler=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args, parser)
    except ReportIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
