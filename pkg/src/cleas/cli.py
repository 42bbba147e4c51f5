"""Command-line entry point: ``cleas run | report | audit``."""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

THREAD_ENV = "CLEAS_THREADS"
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


def _cap_threads() -> None:
    # must run before numpy is imported to take effect
    threads = os.environ.get(THREAD_ENV)
    if threads:
        for var in _THREAD_VARS:
            os.environ[var] = threads


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cleas", description="Continual learning with neuron-level architecture search.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="learn a task sequence and write a run directory")
    run.add_argument("--config", help="key = value config file")
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override one config key (repeatable)")
    run.add_argument("--out", help="run directory (defaults to the config's 'out' key)")
    run.add_argument("--quiet", action="store_true")

    report = sub.add_parser("report", help="print summary CSV and render figures")
    report.add_argument("runs", nargs="+", help="run directories; several runs print a comparison table")
    report.add_argument("--figures", help="directory for PNG figures (default: <first run>/figures)")
    report.add_argument("--no-figures", action="store_true")
    report.add_argument("--allocation", action="store_true", help="print the per-layer neuron allocation table")

    audit = sub.add_parser("audit", help="re-evaluate a run and check its invariants")
    audit.add_argument("run", help="run directory")
    return parser


def cmd_run(args) -> int:
    from cleas.config import load_config
    from cleas.errors import ConfigError, SearchError
    from cleas.orchestrator import run_sequence

    try:
        cfg = load_config(args.config, args.overrides)
    except (ConfigError, OSError) as exc:
        print(f"cleas run: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg.out)

    def progress(rep):
        if not args.quiet:
            r = rep.row()
            print(f"task {r['task']}: test_acc={r['test_acc']:.4f} params={r['params']} "
                  f"reused_old={r['reused_old']} new={r['new']} ({r['seconds']:.1f}s)", file=sys.stderr)

    try:
        result = run_sequence(cfg, out, progress)
    except ConfigError as exc:
        print(f"cleas run: {exc}", file=sys.stderr)
        return 2
    except SearchError as exc:
        print(f"cleas run: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, RuntimeError, OSError) as exc:
        print(f"cleas run: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if not args.quiet:
        print(f"mean test accuracy {result.summary['mean_test_acc']:.4f}; run written to {out}", file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    from cleas import report
    from cleas.errors import ConfigError

    try:
        if len(args.runs) == 1:
            sys.stdout.write(report.summary_csv(args.runs[0]))
            if args.allocation:
                sys.stdout.write(report.allocation_csv(args.runs[0]))
        else:
            sys.stdout.write(report.compare_csv(args.runs))
        if not args.no_figures:
            target = Path(args.figures) if args.figures else Path(args.runs[0]) / "figures"
            report.render_figures(args.runs, target)
    except (ConfigError, OSError, KeyError) as exc:
        print(f"cleas report: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_audit(args) -> int:
    from cleas.audit import audit_run

    start = time.perf_counter()
    try:
        violations = audit_run(args.run)
    except OSError as exc:
        violations = [str(exc)]
    for v in violations:
        print(f"VIOLATION {v}")
    status = "FAILED" if violations else "OK"
    print(f"audit {status}: {len(violations)} violation(s) in {time.perf_counter() - start:.1f}s")
    return 1 if violations else 0


def main(argv=None) -> int:
    _cap_threads()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"run": cmd_run, "report": cmd_report, "audit": cmd_audit}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
