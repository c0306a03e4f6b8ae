"""Command-line entry point: run experiments, run a config directory, list
the catalog."""

from __future__ import annotations

import argparse
import sys

from . import lab


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diraclab",
        description="Lattice laboratory for the Dirac time operator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", help="path to a .cfg file")
    p_run.add_argument("--out", default=None,
                       help="output root (overrides DIRACLAB_OUT and the config)")

    p_all = sub.add_parser("run-all", help="run every .cfg in a directory")
    p_all.add_argument("config_dir", help="directory of .cfg files")
    p_all.add_argument("--out", default=None,
                       help="output root (overrides DIRACLAB_OUT and the configs)")

    sub.add_parser("list", help="list the experiment catalog")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for line in lab.list_experiments():
            print(line)
        return lab.EXIT_OK
    if args.command == "run":
        return lab.run_config_file(args.config, args.out)
    return lab.run_all(args.config_dir, args.out)


if __name__ == "__main__":
    sys.exit(main())
