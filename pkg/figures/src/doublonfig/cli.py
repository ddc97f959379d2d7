"""Command line: render one figure kind from one bundle."""

from __future__ import annotations

import argparse
import sys

from .bundle import BundleError, RunBundle
from .plots import KINDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doublonfig",
        description="Render figures from doublonlab output bundles.")
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render one figure")
    plot.add_argument("kind", choices=sorted(KINDS))
    plot.add_argument("--bundle", required=True, help="bundle directory")
    plot.add_argument("--out", required=True, help="image file to write")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        bundle = RunBundle.load(args.bundle)
        path = KINDS[args.kind](bundle, args.out)
    except BundleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
