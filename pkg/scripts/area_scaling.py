#!/usr/bin/env python3
"""Minimum pulse area vs atom number, with a power-law fit.

Runs the bisection search for every N in the configured range (several
minutes for the default 3..12) and writes scaling.json, min_area.csv and
scaling.dat under results/scaling/.
"""
import argparse
from pathlib import Path

from rydghz.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("results/scaling"))
    args = ap.parse_args()
    raise SystemExit(main(["--preset", "fig4", "--out", str(args.out), "scaling"]))
