#!/usr/bin/env python3
"""Branch-transfer trajectory at the reference operating point (N = 5).

Writes trajectory.csv and summary.json under results/transfer/, then runs
the full three-step protocol at the same operating point for comparison.
"""
import sys
from pathlib import Path

from rydghz.cli import main

if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("results/transfer")
    code = main(["--preset", "fig2", "--out", str(out), "simulate"])
    if code == 0:
        code = main(["--preset", "fig2", "--out", str(out / "ghz"), "ghz"])
    raise SystemExit(code)
