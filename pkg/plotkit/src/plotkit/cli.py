"""Command-line entry point: plotkit <kind> --in <csv...> --out <img>."""

import argparse
import sys

from .figures import FigureKind, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit", description="Render figures from experiment CSVs")
    parser.add_argument("kind", choices=[k.value for k in FigureKind])
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSV file(s)")
    parser.add_argument("--out", required=True, metavar="IMG",
                        help="output image path (extension picks the format)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(args.kind, args.inputs, args.out)
        render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
