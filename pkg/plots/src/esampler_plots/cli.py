"""Command line for rendering figures out of a run directory."""

import argparse
import sys

from .artifacts import ArtifactError
from .render import FIGURE_KINDS, render


def make_parser():
    parser = argparse.ArgumentParser(prog="esampler-plots",
                                     description="Render figures from run artifacts")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure kind")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--snapshots", default="first,last",
                   help="'first', 'last', 'all', or comma-separated iterations")
    p.add_argument("--dims", default="0,1",
                   help="pair of coordinate indices for the scatter slice")
    p.add_argument("--fixed", default=None,
                   help="comma-separated values for the non-plotted coordinates")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    dims = tuple(int(v) for v in args.dims.split(","))
    if len(dims) != 2:
        print("--dims needs exactly two comma-separated indices", file=sys.stderr)
        return 2
    fixed = None
    if args.fixed is not None:
        fixed = [float(v) for v in args.fixed.split(",")]
    try:
        path = render(args.run, args.kind, args.out, snapshots=args.snapshots,
                      dims=dims, fixed=fixed)
    except ArtifactError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"missing file: {e}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
