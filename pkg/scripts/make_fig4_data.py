#!/usr/bin/env python3
"""Produce the three-way comparison table as results/fig4.csv.

Simulates the two-sensor split, the single blocking queue, and the
preemptive server pair over the arrival-rate grid (slow at the default
protocol: a few minutes). Extra arguments are forwarded to the CLI.
"""

import sys
from pathlib import Path

from aoi_shs.cli import main

if __name__ == "__main__":
    Path("results").mkdir(exist_ok=True)
    argv = ["compare-fig4", "--out", "results/fig4.csv", *sys.argv[1:]]
    raise SystemExit(main(argv))
