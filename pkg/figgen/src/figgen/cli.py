"""figgen: render figures from cellmotion output files.

  figgen trajectory <timeseries.csv> <snapshot...> --out traj.png
  figgen fields <snapshot> --out fields.png
  figgen mass <timeseries.csv> --out mass.png
  figgen velocity <timeseries.csv> --out velocity.png
  figgen area <timeseries.csv> --out area.png
"""

import argparse
import sys

from . import plots
from .readers import DataError


def _build_parser():
    ap = argparse.ArgumentParser(prog="figgen")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajectory")
    p.add_argument("timeseries")
    p.add_argument("snapshots", nargs="*")
    p.add_argument("--out", required=True)

    p = sub.add_parser("fields")
    p.add_argument("snapshot")
    p.add_argument("--out", required=True)
    p.add_argument("--level", type=float, default=0.5)

    for name in ("mass", "velocity", "area"):
        p = sub.add_parser(name)
        p.add_argument("timeseries")
        p.add_argument("--out", required=True)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "trajectory":
            plots.plot_trajectory(args.timeseries, args.snapshots, args.out)
        elif args.command == "fields":
            plots.plot_fields(args.snapshot, args.out, level=args.level)
        elif args.command == "mass":
            plots.plot_mass(args.timeseries, args.out)
        elif args.command == "velocity":
            plots.plot_velocity(args.timeseries, args.out)
        elif args.command == "area":
            plots.plot_area(args.timeseries, args.out)
        return 0
    except DataError as exc:
        print(f"figgen: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
