#!/usr/bin/env python3
"""Point-source experiments: distance sweep and set-size sweep.

The fundamental solution is singular at the source, so difficulty is
controlled by the source distance from the boundary in wavelengths.
Writes fundamental_distance.csv and fundamental_psweep.csv.
"""

import argparse
import json
import math
import os
import sys
import tempfile

from epw import cli

KAPPA = 5.0
P_FULL = 2704
P_SWEEP = [169, 400, 784, 1600, 2704]
PSWEEP_DIST = 2.0 / 3.0  # source distance for the size sweep, in wavelengths


def _run(config: dict, out: str) -> int:
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(config, fh)
        path = fh.name
    try:
        return cli.main(["fundamental", "--config", path, "--out", out])
    finally:
        os.unlink(path)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/fundamental")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    base = {"kappa": KAPPA, "target": {"fundamental": {"source": [0.0, 0.0, 1.5]}}}

    rc = _run({**base, "P": P_FULL}, args.out)
    if rc != 0:
        return rc

    lam = 2.0 * math.pi / KAPPA
    radius = 1.0 + PSWEEP_DIST * lam
    sweep = {
        "kappa": KAPPA,
        "P": P_SWEEP,
        "target": {"fundamental": {"source": [0.0, 0.0, radius]}},
    }
    return _run(sweep, args.out)


if __name__ == "__main__":
    sys.exit(main())
