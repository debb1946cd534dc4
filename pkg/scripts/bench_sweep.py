#!/usr/bin/env python3
"""Time planning cycles at the default size and across the rollout-count sweep."""

import argparse
import sys

from mppi_planner.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=30)
    ap.add_argument("--config", default=None)
    args = ap.parse_args()
    argv = ["bench", "--repeats", str(args.repeats)]
    if args.config:
        argv += ["--config", args.config]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
