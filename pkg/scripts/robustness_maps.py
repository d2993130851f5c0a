#!/usr/bin/env python3
"""Robustness sweeps over the pulse-delay and pulse-area axes (N = 5).

Produces sweep.csv plus two-column .dat files per observable column in
results/robustness/{delay,area}/.  Pass --workers to parallelize rows.
"""
import argparse
from pathlib import Path

from rydghz.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("results/robustness"))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    w = ["--workers", str(args.workers)]
    code = main(["--preset", "fig3_top", "--out", str(args.out / "delay"), *w, "sweep"])
    if code == 0:
        code = main(["--preset", "fig3_bottom", "--out", str(args.out / "area"), *w, "sweep"])
    raise SystemExit(code)
