"""figures CLI: render figure specs against emitted CSVs."""

from __future__ import annotations

import argparse
import sys

from .render import render
from .spec import FigureError, load_specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figures", description=__doc__)
    parser.add_argument("--spec", required=True, help="JSON figure specification")
    parser.add_argument("--out", required=True, help="output directory for PNG/SVG files")
    args = parser.parse_args(argv)
    try:
        specs = load_specs(args.spec)
        for spec in specs:
            for path in render(spec, args.out):
                print(path)
    except (FigureError, OSError, KeyError, ValueError) as exc:
        print(f"figure error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
