"""Command line: render one figure from an aggregates.csv.

Exit codes: 0 on success, 1 on any input problem (missing or malformed file,
filters that select nothing), 2 for bad command-line usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_KINDS, FigureSpec, SelectionError, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="otocplot",
        description="Render figures from kickedising aggregates.csv files",
    )
    p.add_argument("aggregates", help="path to aggregates.csv")
    p.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    p.add_argument("--out", required=True, help="output image (.svg or .png)")
    p.add_argument("--w", type=float, nargs="+", help="keep these disorder strengths")
    p.add_argument("--n", type=int, nargs="+", help="keep these step counts")
    p.add_argument("--x", type=int, nargs="+", help="keep these distances")
    p.add_argument("--f", type=float, nargs="+", help="keep these noise factors")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            figure_kind=args.kind,
            input=Path(args.aggregates),
            output=Path(args.out),
            w=tuple(args.w) if args.w else None,
            n=tuple(args.n) if args.n else None,
            x=tuple(args.x) if args.x else None,
            f=tuple(args.f) if args.f else None,
        )
        out = render(spec)
    except (OSError, ValueError) as exc:
        # SelectionError is a ValueError: empty selections land here too
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
