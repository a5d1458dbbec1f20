"""Command line entry: run directories in, one PNG out."""

import argparse
import sys

from .errors import PlotsError
from .figures import default_figure_spec, render_figure
from .io import read_key_values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="runplots",
        description="Draw the five-panel comparison figure from one or two "
                    "run directories written by the simulation CLI.")
    parser.add_argument("run_dirs", nargs="+", metavar="RUN_DIR",
                        help="one or two run directories")
    parser.add_argument("--out", default="figure.png",
                        help="output PNG path (default: figure.png)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if len(args.run_dirs) > 2:
        print("error: expected one or two run directories", file=sys.stderr)
        return 2
    try:
        config = read_key_values(f"{args.run_dirs[0]}/config.resolved")
        spec = default_figure_spec(config.get("example", ""))
        out = render_figure(spec, args.run_dirs, args.out)
    except (PlotsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
