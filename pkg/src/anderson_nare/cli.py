"""Command-line entry point for the NARE benchmark grid."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import DEFAULT_METHODS, DEFAULT_PARAMS, ExperimentSpec, emit_table, run_experiment

log = logging.getLogger("anderson_nare")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="anderson-nare-bench",
        description="Compare Anderson acceleration with FP/MFP/NBJ/NBGS on the transport NARE.",
    )
    p.add_argument("--config", type=Path, help="JSON file with ExperimentSpec fields; flags override it")
    p.add_argument("--method", action="append", help="AA:<m>, FP, MFP, NBJ or NBGS (repeatable)")
    p.add_argument("--a", action="append", type=float, help="parameter a (repeatable, paired with --c)")
    p.add_argument("--c", action="append", type=float, help="parameter c (repeatable, paired with --a)")
    p.add_argument("--n", action="append", type=int, help="problem size, multiple of 4 (repeatable)")
    p.add_argument("--repeats", type=int)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--format", choices=["csv", "markdown", "json"])
    p.add_argument("--out", type=Path, help="write the table here instead of stdout")
    p.add_argument("--history", type=Path, help="directory for per-run residual histories")
    p.add_argument("--theory", action="store_true", help="evaluate convergence conditions for AA runs (n <= 256)")
    p.add_argument("--long", action="store_true", help="include the very slow near-singular baseline rows")
    p.add_argument("--workers", type=int, help="process pool size for independent cells")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    base = {}
    if args.config is not None:
        base = json.loads(args.config.read_text())
    if args.method:
        base["methods"] = args.method
    if args.a or args.c:
        if not args.a or not args.c or len(args.a) != len(args.c):
            raise SystemExit("--a and --c must be given the same number of times")
        base["params"] = list(zip(args.a, args.c))
    if args.n:
        base["sizes"] = args.n
    for key, val in (
        ("repeats", args.repeats),
        ("max_iter", args.max_iter),
        ("output", args.format),
        ("workers", args.workers),
    ):
        if val is not None:
            base[key] = val
    if args.history is not None:
        base["history_dump"] = str(args.history)
    if args.long:
        base["long"] = True
    if args.theory:
        base["theory"] = True
    base.setdefault("methods", list(DEFAULT_METHODS))
    base.setdefault("params", list(DEFAULT_PARAMS))
    if "params" in base:
        base["params"] = [tuple(pc) for pc in base["params"]]
    return ExperimentSpec(**base)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        spec = spec_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    rows = run_experiment(spec)
    text = emit_table(rows, spec.output)
    if args.out is not None:
        args.out.write_text(text if text.endswith("\n") else text + "\n")
        log.info("wrote %d rows to %s", len(rows), args.out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")

    if spec.theory:
        theory = [r.theory for r in rows if r.theory is not None]
        payload = json.dumps(theory, indent=2)
        if args.out is not None:
            tpath = args.out.with_suffix(".theory.json")
            tpath.write_text(payload + "\n")
            log.info("wrote theory report to %s", tpath)
        else:
            sys.stdout.write(payload + "\n")

    failed = [r for r in rows if r.status not in ("converged", "skipped")]
    for r in failed:
        log.warning("%s (a=%g, c=%g, n=%d): %s", r.method, r.a, r.c, r.n, r.status)
    return 0 if not failed else 1


if __name__ == "__main__":
    sys.exit(main())
