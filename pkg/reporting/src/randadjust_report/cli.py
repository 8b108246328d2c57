"""Render metrics CSVs from a directory into panel figures.

Usage: randadjust-render --in <dir-or-csv> --out <dir> [--panel bias|sdr|coverage]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import PANELS, FigureSpec, SchemaMismatch, render_panels


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randadjust-render", description=__doc__)
    parser.add_argument("--in", dest="input", required=True,
                        help="metrics CSV file or directory of CSVs")
    parser.add_argument("--out", required=True, help="output directory for PNGs")
    parser.add_argument("--panel", choices=PANELS, default=None,
                        help="render a single panel instead of all three")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    source = Path(args.input)
    if source.is_dir():
        inputs = tuple(sorted(source.glob("*.csv")))
    else:
        inputs = (source,)
    if not inputs:
        print(f"error: no CSV files under {source}", file=sys.stderr)
        return 2
    panels = (args.panel,) if args.panel else PANELS
    try:
        reports = render_panels(FigureSpec(inputs=inputs, panels=panels, dpi=args.dpi), args.out)
    except (SchemaMismatch, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for rep in reports:
        lines = ",".join(str(k) for k in rep.lines_per_facet)
        print(f"{rep.panel}: {rep.path} facets={len(rep.facets)} lines=[{lines}]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
