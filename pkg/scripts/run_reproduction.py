#!/usr/bin/env python3
"""Run both reference experiments end to end and drop reports + plots in results/.

Usage:
    python scripts/run_reproduction.py [--seeds 20] [--out results]

Equivalent to:
    leveltopo reproduce --paper-fig 3a --seeds 20 --deterministic ...
    leveltopo reproduce --paper-fig 3b --seeds 20 --deterministic ...
"""

import argparse
import sys
from pathlib import Path

from leveltopo.cli import main as leveltopo_main


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--out", default="results")
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    worst = 0
    for fig in ("3a", "3b"):
        print(f"=== reproduce {fig} ({args.seeds} seeds) ===")
        code = leveltopo_main([
            "reproduce", "--paper-fig", fig, "--seeds", str(args.seeds),
            "--report", str(out / f"reproduce_{fig}.json"),
            "--svg-dir", str(out / f"svg_{fig}"),
            "--deterministic",
        ])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run())
