"""Command-line interface: ``gpbench-plots render --csv ... --out ...``."""

import argparse
import sys

from .reader import SchemaError
from .render import render_tradeoff


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="gpbench-plots",
        description="Render accuracy-versus-runtime figures from a "
                    "benchmark results CSV.")
    sub = parser.add_subparsers(dest="command", required=True)
    render = sub.add_parser("render", help="render trade-off panels")
    render.add_argument("--csv", required=True, help="benchmark results CSV")
    render.add_argument("--out", required=True, help="output directory")
    render.add_argument("--tasks", nargs="+", default=None,
                        help="restrict to these tasks")
    render.add_argument("--metrics", nargs="+", default=None,
                        help="restrict to these metrics")
    args = parser.parse_args(argv)

    try:
        written = render_tradeoff(args.csv, args.out,
                                  tasks=args.tasks, metrics=args.metrics)
    except (SchemaError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
