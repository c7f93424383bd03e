"""Command-line interface: `plot fields <run-dir>` and
`plot convergence <run-dir>`; writes PNG files into the run directory."""

from __future__ import annotations

import argparse
import sys

from .figures import render_run_directory
from .readers import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render figures from identification run artifacts",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("fields", "heatmaps of every field/snapshot in the run directory"),
        ("convergence", "log-scale cost curves"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("run_dir", help="directory with the run artifacts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = render_run_directory(args.run_dir, args.command)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
