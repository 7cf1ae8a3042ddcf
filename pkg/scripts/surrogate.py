#!/usr/bin/env python3
"""Random surrogate solution approximated by evanescent sets of growing size.

The target is a modal superposition with damped random coefficients, so the
achievable accuracy is limited only by the set. Writes surrogate.csv.
"""

import argparse
import json
import os
import sys
import tempfile

from epw import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/surrogate")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--strategy", default="e", choices=list("abcde"))
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    # N = (L+1)^2 modal degrees of freedom; sweep P through 1..4 times that
    L = 25
    N = (L + 1) ** 2
    config = {
        "kappa": 5.0,
        "L": L,
        "strategy": args.strategy,
        "P": [N, 2 * N, 3 * N, 4 * N],
        "seed": args.seed,
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(config, fh)
        path = fh.name
    try:
        return cli.main(["surrogate", "--config", path, "--out", args.out])
    finally:
        os.unlink(path)


if __name__ == "__main__":
    sys.exit(main())
