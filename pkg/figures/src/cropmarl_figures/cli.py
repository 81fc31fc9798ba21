"""render_figures: turn a cropmarl bench CSV into one of the four charts.

Usage: render_figures <joint-reward|runtime|slope|discount> --in results.csv --out figure.png
Exit codes: 0 success, 2 bad arguments or malformed input.
"""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="render_figures",
                                     description="Render benchmark figures from result CSVs")
    parser.add_argument("figure", choices=FIGURE_KINDS, help="figure kind")
    parser.add_argument("--in", dest="input_csv", required=True, help="bench results CSV")
    parser.add_argument("--out", dest="output_path", required=True, help="output image path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(FigureSpec(args.figure, args.input_csv, args.output_path))
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
