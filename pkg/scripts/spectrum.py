#!/usr/bin/env python3
"""Singular value spectra of the boundary sampling matrix.

Compares the propagative spectrum (exponential tail past the wavenumber)
with the evanescent one. Writes singular_values.csv per series.
"""

import argparse
import json
import os
import sys
import tempfile

from epw import cli


def _run(config: dict, out: str) -> int:
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(config, fh)
        path = fh.name
    try:
        return cli.main(["singular-values", "--config", path, "--out", out])
    finally:
        os.unlink(path)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/spectrum")
    args = ap.parse_args()

    prop_dir = os.path.join(args.out, "propagative")
    ev_dir = os.path.join(args.out, "evanescent")
    os.makedirs(prop_dir, exist_ok=True)
    os.makedirs(ev_dir, exist_ok=True)

    rc = _run({"kappa": 4.0, "P": [256, 1024]}, prop_dir)
    if rc != 0:
        return rc
    return _run(
        {"kappa": 4.0, "L": 16, "strategy": "e", "P": [256, 1024]}, ev_dir
    )


if __name__ == "__main__":
    sys.exit(main())
