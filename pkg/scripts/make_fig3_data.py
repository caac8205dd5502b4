#!/usr/bin/env python3
"""Produce the age surface over the (lambda1, mu2) grid as results/fig3.csv.

Theory-only by default; pass --simulate (plus any other sweep flags) to add
the simulated columns. Extra arguments are forwarded to the CLI.
"""

import sys
from pathlib import Path

from aoi_shs.cli import main

if __name__ == "__main__":
    Path("results").mkdir(exist_ok=True)
    argv = ["sweep-fig3", "--out", "results/fig3.csv", *sys.argv[1:]]
    raise SystemExit(main(argv))
