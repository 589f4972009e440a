"""Command line: plot <kind> <csv...> -o <out.png>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURE_KINDS, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from manifold-ahrs metrics or sensor-log CSVs.",
    )
    parser.add_argument("kind", choices=FIGURE_KINDS, help="figure kind")
    parser.add_argument(
        "inputs",
        nargs="+",
        help="metrics CSVs, one per mode (sensor-log CSVs for mag_scatter)",
    )
    parser.add_argument("-o", "--output", required=True, help="output image path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        kind=args.kind,
        inputs=tuple(Path(p) for p in args.inputs),
        output=Path(args.output),
    )
    try:
        out = render(spec)
    except (SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
