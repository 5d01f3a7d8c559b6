#!/usr/bin/env python3
"""Probe level sets of random non-singular networks; every component should
touch the window frame (none bounded), at every escalation scale.

Usage:
    python scripts/run_nonsingular_sweep.py [--count 100] [--out results]
"""

import argparse
import sys
from pathlib import Path

from leveltopo.cli import main as leveltopo_main


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results")
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return leveltopo_main([
        "sweep-nonsingular", "--count", str(args.count), "--seed", str(args.seed),
        "--report", str(out / "sweep_nonsingular.json"), "--deterministic",
    ])


if __name__ == "__main__":
    sys.exit(run())
