"""Command line interface.

Subcommands:

    run <config.json>      integrate a configured scenario, write CSVs,
                           the final state, and companion figures
    convert <in> <out>     Eulerian <-> Lagrangian state conversion
    metric <a> <b>         distance between two saved states, as JSON
    scenarios              list built-in scenarios
    sweep <dir>            run every config in a directory in parallel

The output directory from a run config can be overridden with the
TWOCH_OUTPUT_DIR environment variable.  Exit codes: 0 success, 2 invalid
configuration or state, 3 solver abort, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _cmd_run(args) -> int:
    from . import evolution, reporting, serialization

    try:
        config = serialization.load_config(args.config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, KeyError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID

    outdir = Path(os.environ.get("TWOCH_OUTPUT_DIR", config.output_dir))
    try:
        series = evolution.solve(config)
    except Exception as exc:  # transform/validation failures before stepping
        print(f"setup failed: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        reporting.write_outputs(series, config, outdir)
        if not args.no_figures:
            reporting.render_figures(series, outdir)
    except OSError as exc:
        print(f"write failed: {exc}", file=sys.stderr)
        return EXIT_IO

    if not series.ok:
        print(f"solver aborted: {series.failure}", file=sys.stderr)
        return EXIT_SOLVER
    print(f"wrote {outdir} (hash {series.provenance}, "
          f"{len(series.snapshots)} snapshots, {len(series.events)} events)")
    return EXIT_OK


def _cmd_convert(args) -> int:
    from . import serialization
    from .state import EulerianState
    from .transform import to_eulerian, to_lagrangian

    try:
        state = serialization.load_state(args.input)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid state: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        if isinstance(state, EulerianState):
            xi = np.linspace(args.grid_min, args.grid_max, args.n or state.x.size)
            out = to_lagrangian(state, xi)
            if args.round_trip:
                back = to_eulerian(out, state.x)
                err = float(np.max(np.abs(back.u - state.u))
                            + np.max(np.abs(back.rho - state.rho)))
                print(json.dumps({"round_trip_sup_error": err}))
        else:
            x = np.linspace(args.grid_min, args.grid_max, args.n or state.xi.size)
            out = to_eulerian(state, x)
            if args.round_trip:
                back = to_lagrangian(out, state.xi)
                err = float(np.max(np.abs(back.y - state.y))
                            + np.max(np.abs(back.U - state.U)))
                print(json.dumps({"round_trip_sup_error": err}))
    except ValueError as exc:
        print(f"conversion failed: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        serialization.save_state(out, args.output)
    except OSError as exc:
        print(f"write failed: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _cmd_metric(args) -> int:
    from . import serialization
    from .metrics import d_R_components, d_D
    from .state import EulerianState, LagrangianState

    try:
        a = serialization.load_state(args.a)
        b = serialization.load_state(args.b)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid state: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if isinstance(a, LagrangianState) and isinstance(b, LagrangianState):
        out = d_R_components(a, b).as_dict()
        out["metric"] = "d_R"
    elif isinstance(a, EulerianState) and isinstance(b, EulerianState):
        from .transform import to_lagrangian
        from .metrics import d_R_components as comp

        lo = min(a.x[0], b.x[0]) - 1.0
        tot = max(a.mu.total(a.x), b.mu.total(b.x))
        hi = max(a.x[-1], b.x[-1]) + 1.0 + tot
        n = max(a.x.size, b.x.size)
        xi = np.linspace(lo, hi, n)
        out = comp(to_lagrangian(a, xi), to_lagrangian(b, xi)).as_dict()
        out["metric"] = "d_D"
    else:
        print("states must both be Eulerian or both Lagrangian", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def _cmd_scenarios(_args) -> int:
    from .scenarios import SCENARIOS

    for name in sorted(SCENARIOS):
        print(f"{name}: {SCENARIOS[name][1]}")
    return EXIT_OK


def _run_one(path: str) -> tuple[str, int]:
    ns = argparse.Namespace(config=path, no_figures=False)
    return path, _cmd_run(ns)


def _cmd_sweep(args) -> int:
    paths = sorted(str(p) for p in Path(args.directory).glob("*.json"))
    if not paths:
        print(f"no configs found in {args.directory}", file=sys.stderr)
        return EXIT_INVALID
    worst = EXIT_OK
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        for path, code in pool.map(_run_one, paths):
            print(f"{path}: exit {code}")
            worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twoch", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a configured simulation")
    pr.add_argument("config")
    pr.add_argument("--no-figures", action="store_true",
                    help="skip matplotlib figure rendering")
    pr.set_defaults(fn=_cmd_run)

    pc = sub.add_parser("convert", help="convert between state descriptions")
    pc.add_argument("input")
    pc.add_argument("output")
    pc.add_argument("--grid-min", type=float, default=-30.0)
    pc.add_argument("--grid-max", type=float, default=30.0)
    pc.add_argument("-n", type=int, default=0, help="output grid size (default: input size)")
    pc.add_argument("--round-trip", action="store_true",
                    help="also report the round-trip sup-norm discrepancy")
    pc.set_defaults(fn=_cmd_convert)

    pm = sub.add_parser("metric", help="distance between two saved states")
    pm.add_argument("a")
    pm.add_argument("b")
    pm.set_defaults(fn=_cmd_metric)

    ps = sub.add_parser("scenarios", help="list built-in scenarios")
    ps.set_defaults(fn=_cmd_scenarios)

    pw = sub.add_parser("sweep", help="run every config JSON in a directory")
    pw.add_argument("directory")
    pw.add_argument("--jobs", type=int, default=None)
    pw.set_defaults(fn=_cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
