"""Command-line entry point: ``risim --config sweep.json``.

Exit status is 0 when every row is ok, 2 when at least one row carries an
error status and 1 when the configuration or output file cannot be used.
"""

from __future__ import annotations

import argparse
import sys
import time

from .sweep import ConfigError, format_csv, load_config, run_sweep, validate, write_csv

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="risim",
        description="Sweep error probabilities of RIS-assisted SSK/SM links.")
    p.add_argument("--config", required=True, help="JSON sweep description")
    p.add_argument("--out", help="CSV output path (overrides the config; '-' for stdout)")
    p.add_argument("--seed", type=int, help="override the Monte Carlo seed")
    p.add_argument("--trials", type=int, help="override the Monte Carlo trial count")
    p.add_argument("--workers", type=int, help="grid points evaluated concurrently")
    p.add_argument("--quiet", action="store_true", help="suppress the summary on stderr")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        spec = load_config(args.config)
        if args.seed is not None:
            spec.seed = args.seed
        if args.trials is not None:
            spec.trials = args.trials
        if args.workers is not None:
            spec.workers = args.workers
        if args.out is not None:
            spec.output = args.out
        problems = validate(spec)
        if problems:
            raise ConfigError(problems)
        rows = run_sweep(spec)
        if spec.output in (None, "-"):
            sys.stdout.write(format_csv(rows))
        else:
            write_csv(rows, spec.output)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"risim: {v}", file=sys.stderr)
        return 1
    bad = sum(not r.ok for r in rows)
    if not args.quiet:
        print(f"risim: {len(rows)} rows, {bad} not ok, {time.perf_counter() - t0:.1f} s",
              file=sys.stderr)
    return 2 if bad else 0
