"""Command-line entry point: render one figure from sweep CSV files."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ma-plot",
                                     description="Render sweep-result figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plot", help="render one figure from CSV input")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="inputs", required=True, action="append",
                   help="input CSV path (repeat for one curve set per file)")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--log-y", dest="log_y", action="store_true", default=None)
    p.add_argument("--linear-y", dest="log_y", action="store_false")
    args = parser.parse_args(argv)

    spec = PlotSpec(kind=args.kind, inputs=args.inputs, output=args.out,
                    log_y=args.log_y)
    try:
        path = render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
