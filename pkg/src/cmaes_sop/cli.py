"""Command-line entry point: ``cmaes-sop run`` and ``cmaes-sop table``."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .exceptions import SoPError
from .harness import ExperimentConfig, format_table, read_results, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmaes-sop", description="CMA-ES on sets of points: experiment runner")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-cell progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a trial battery and write CSV results")
    run.add_argument("--config", required=True, help="experiment config (JSON)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the base seed")
    run.add_argument("--trials", type=int, default=None, help="override trials per cell")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")

    table = sub.add_parser("table", help="print the SR/SP1 table of a finished run")
    table.add_argument("--out", required=True, help="output directory of a previous run")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            cfg = ExperimentConfig.load(args.config)
            if args.seed is not None:
                cfg.base_seed = args.seed
            if args.trials is not None:
                cfg.trials = args.trials
            t0 = time.perf_counter()
            run_experiment(cfg, args.out, jobs=args.jobs)
            print(format_table(read_results(args.out)))
            print(f"\nwrote {args.out}/results.csv in {time.perf_counter() - t0:.1f}s")
        else:
            print(format_table(read_results(args.out)))
    except (SoPError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
