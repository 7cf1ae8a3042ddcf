"""Command line entry point: epw-plot --kind <k> --in <csv...> --out <img>."""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")

from .figures import KIND_SCHEMAS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="epw-plot",
        description="Render epw experiment CSV artifacts as figures",
    )
    parser.add_argument("--kind", required=True, choices=sorted(KIND_SCHEMAS))
    parser.add_argument(
        "--in",
        dest="inputs",
        required=True,
        nargs="+",
        metavar="CSV",
        help="one or more CSV artifacts; several files overlay in one figure",
    )
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    parser.add_argument(
        "--linear",
        action="store_true",
        help="linear instead of logarithmic value axis",
    )
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            inputs=tuple(args.inputs),
            kind=args.kind,
            out=args.out,
            yscale="linear" if args.linear else "log",
        )
        path = render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
