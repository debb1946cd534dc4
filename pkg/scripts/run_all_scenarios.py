#!/usr/bin/env python3
"""Run the three built-in driving scenarios and write CSV/metrics/plots."""

import argparse
import sys

from mppi_planner.cli import main as cli_main
from mppi_planner.simulator import BUILTIN_SCENARIOS


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out")
    ap.add_argument("--config", default=None)
    args = ap.parse_args()

    worst = 0
    for name in BUILTIN_SCENARIOS:
        argv = [
            "simulate", "--scenario", name, "--seed", str(args.seed),
            "--out", f"{args.out}/{name}",
        ]
        if args.config:
            argv += ["--config", args.config]
        code = cli_main(argv)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
