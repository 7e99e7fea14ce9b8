"""Command-line interface.

Subcommands:
  run <config>          execute a run (or every case of a sweep preset)
  presets               list the built-in presets
  classify <csv>        label a recorded trajectory
  convergence <config>  time/space refinement matrix on the moving-cell setup

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import driver, fileio
from .config import DEFAULTS, PRESETS, SWEEP_CASES, parse_config, preset_runs, render_config, resolve
from .errors import CellMotionError, ParseError, TooShort, ValidationError

_PRESET_NOTES = {
    "polarization_random": "stationary star-shaped cell, seeded random initial activity",
    "polarization_stimulus": "stationary cell, two opposing stimulus pulses",
    "trajectory_straight": "moving cell in the straight-trajectory regime",
    "trajectory_circular": "moving cell in the circular-trajectory regime",
    "diffusion_sweep": "three diffusivity pairs at fixed tension/contractility",
    "contractility_sweep": "three contractility thresholds at fixed diffusivities",
    "one_vs_two_species": "same parameters under the full and reduced models",
    "convergence_study": "base setup for the refinement matrix",
    "mass_check": "circular-regime run used for the mass-drift check",
}


def _build_parser():
    ap = argparse.ArgumentParser(prog="cellmotion")
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a configuration or preset")
    run_p.add_argument("config", help="path to a config file or inline 'key = value' text")
    run_p.add_argument("--out", default="out", help="output directory")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--snapshot-every", type=float, default=None)
    run_p.add_argument("--quiet", action="store_true")

    sub.add_parser("presets", help="list available presets")

    cl_p = sub.add_parser("classify", help="classify a recorded trajectory")
    cl_p.add_argument("timeseries", help="CSV produced by 'run'")
    cl_p.add_argument("--t-skip", type=float, default=10.0)

    cv_p = sub.add_parser("convergence", help="run the refinement matrix")
    cv_p.add_argument("config", help="base configuration")
    cv_p.add_argument("--out", default="out")
    cv_p.add_argument("--quiet", action="store_true")
    return ap


def _emit_run(name: str, result, out_dir: str, quiet: bool):
    case_dir = os.path.join(out_dir, name)
    os.makedirs(case_dir, exist_ok=True)
    with open(os.path.join(case_dir, "config.txt"), "w") as fh:
        fh.write(render_config(result.config))
    fileio.write_timeseries(result.diagnostics, os.path.join(case_dir, "timeseries.csv"))
    for snap in result.snapshots:
        fileio.write_field_snapshot(
            snap, os.path.join(case_dir, f"snapshot_t{snap.t:08.3f}.txt")
        )
    fileio.write_field_snapshot(result.final_state, os.path.join(case_dir, "final_state.txt"))
    if not quiet:
        arrays = result.diagnostics.arrays()
        mass = arrays["mass"]
        drift = 0.0 if mass.size < 2 else abs(mass - mass[0]).max() / abs(mass[0])
        print(
            f"[{name}] t={result.final_state.t:g} steps={result.stats['steps']} "
            f"mass_drift={drift:.3e} wall={result.stats['wall_time']:.1f}s"
        )
    return case_dir


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.snapshot_every is not None:
        config = replace(config, snapshot_every=args.snapshot_every)
    runs = preset_runs(config)
    os.makedirs(args.out, exist_ok=True)
    for name, cfg in runs:
        result = driver.run(cfg)
        _emit_run(name, result, args.out, args.quiet)
    return 0


def _cmd_presets() -> int:
    for name in sorted(PRESETS):
        extra = f" ({len(SWEEP_CASES[name])} cases)" if name in SWEEP_CASES else ""
        print(f"{name:24s} {_PRESET_NOTES.get(name, '')}{extra}")
    return 0


def _cmd_classify(args) -> int:
    cols = fileio.read_timeseries(args.timeseries)
    try:
        verdict = driver.classify_trajectory(
            cols["t"], cols["xc"], cols["yc"], t_skip=args.t_skip
        )
    except TooShort as exc:
        print(f"Undetermined (too short: {exc})")
        return 0
    print(f"{verdict.kind}")
    print(f"  net heading change      {verdict.net_heading_change:+.4f} rad")
    print(f"  signed total turning    {verdict.total_turning:+.4f} rad")
    print(f"  lateral deviation ratio {verdict.lateral_deviation_ratio:.4f}")
    print(f"  fitted circle radius    {verdict.circle_radius:.4f}")
    print(f"  preparation time        {verdict.preparation_time:.4f}")
    return 0


def _cmd_convergence(args) -> int:
    base = parse_config(args.config)
    os.makedirs(args.out, exist_ok=True)

    dts = (5e-3, 2.5e-3, 1.25e-3)
    time_results = []
    for dt in dts:
        cfg = replace(base, dt=dt, output_every=max(base.output_every, dt * 10))
        result = driver.run(cfg, collect_snapshots=False)
        time_results.append(result)
        if not args.quiet:
            print(f"time study dt={dt:g} done ({result.stats['wall_time']:.1f}s)")
    d_time = driver.refinement_distances(time_results)
    order_time = driver.observed_order(d_time)

    hs = (0.1, 0.05, 0.025)
    space_results = []
    for h in hs:
        cfg = replace(base, h=h, dt=1.25e-3, output_every=max(base.output_every, 1.25e-2))
        result = driver.run(cfg, collect_snapshots=False)
        space_results.append(result)
        if not args.quiet:
            print(f"space study h={h:g} done ({result.stats['wall_time']:.1f}s)")
    d_space = driver.refinement_distances(space_results)
    order_space = driver.observed_order(d_space)

    report = os.path.join(args.out, "convergence.csv")
    with open(report, "w") as fh:
        fh.write("study,fine_pair,coarse_pair,observed_order\n")
        fh.write(f"time,{d_time[1]:.17g},{d_time[0]:.17g},{order_time:.17g}\n")
        fh.write(f"space,{d_space[1]:.17g},{d_space[0]:.17g},{order_space:.17g}\n")
    print(f"time study:  d(dt5,dt2.5)={d_time[0]:.4e}  d(dt2.5,dt1.25)={d_time[1]:.4e}  order={order_time:.2f}")
    print(f"space study: d(h.1,h.05)={d_space[0]:.4e}  d(h.05,h.025)={d_space[1]:.4e}  order={order_space:.2f}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "presets":
            return _cmd_presets()
        if args.command == "classify":
            return _cmd_classify(args)
        if args.command == "convergence":
            return _cmd_convergence(args)
        return 1
    except (ParseError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except CellMotionError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
