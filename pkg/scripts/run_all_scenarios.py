#!/usr/bin/env python3
"""Run every shipped scenario with its configured controller(s).

Results land under ./results/<scenario>/<controller>/ by default.

    python scripts/run_all_scenarios.py [--out DIR] [--jobs N]
"""

import argparse
import sys

from marsquad.cli import main as cli_main
from marsquad.scenarios import scenario_names, scenario_path


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    parser.add_argument("--jobs", type=int, default=None)
    args = parser.parse_args()

    configs = [str(scenario_path(name)) for name in scenario_names()]
    argv = ["sweep", *configs, "--out", args.out]
    if args.jobs:
        argv += ["--jobs", str(args.jobs)]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
