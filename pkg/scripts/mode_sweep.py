#!/usr/bin/env python3
"""Propagative instability baseline: approximate each spherical wave b_l^0
with a fixed propagative plane-wave set and record residual and coefficient
growth as l crosses the wavenumber.

Writes mode_sweep.csv into --out.
"""

import argparse
import json
import os
import sys
import tempfile

from epw import cli

DESK = {"kappa": 6.0, "P": 2304, "oversample": 2.0, "ell_max": 30}
PAPER = {"kappa": 16.0, "P": 4096, "oversample": 2.0, "ell_max": 80}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/mode_sweep")
    ap.add_argument("--paper-scale", action="store_true")
    ap.add_argument("--all-m", action="store_true")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    config = PAPER if args.paper_scale else DESK
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(config, fh)
        path = fh.name
    try:
        argv = ["mode-sweep", "--config", path, "--out", args.out]
        if args.all_m:
            argv.append("--all-m")
        return cli.main(argv)
    finally:
        os.unlink(path)


if __name__ == "__main__":
    sys.exit(main())
