"""Command line for figure rendering: one figure per invocation, plus a
convenience walker that drops figures next to a results directory's files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, SchemaError, render

# results-directory artifacts the walker knows how to render in place
_AUTORENDER = (
    ("*_series*.csv", "series"),
    ("r_series.csv", "series"),
    ("spectrum.json", "spectrum"),
    ("uncertainty.json", "bars"),
    ("mt_*.json", "bars"),
    ("boost_run.csv", "trajectory"),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diracfig", description="Render lab outputs into vector figures")
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="render one figure")
    p_render.add_argument("--kind", required=True, choices=KINDS)
    p_render.add_argument("--in", dest="inputs", required=True, nargs="+",
                          help="input CSV/JSON path(s)")
    p_render.add_argument("--out", required=True, help="output image path")

    p_all = sub.add_parser("render-all",
                           help="render every known artifact in a results "
                                "directory, figures written alongside")
    p_all.add_argument("results_dir")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "render":
        try:
            result = render(args.kind, args.inputs, args.out)
        except (SchemaError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"{result.kind}: wrote {result.out_path} ({result.n_points} points)")
        return 0

    root = Path(args.results_dir)
    if not root.is_dir():
        print(f"error: not a directory: {root}", file=sys.stderr)
        return 1
    count = 0
    failures = 0
    for pattern, kind in _AUTORENDER:
        for path in sorted(root.rglob(pattern)):
            out = path.with_suffix(".svg")
            try:
                render(kind, [path], out)
                count += 1
                print(f"{kind}: {path} -> {out}")
            except SchemaError as exc:
                failures += 1
                print(f"skip {path}: {exc}", file=sys.stderr)
    print(f"rendered {count} figure(s)")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
