"""Command-line entry point.

Exit codes: 0 success, 1 validation or parse error, 2 simulation fault.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ScenarioError, SimulationFault
from .runner import run_simulation, tune, write_gnuplot_script, write_simulation_outputs, write_tune_outputs
from .scenario import builtin_scenario, builtin_scenario_names, load_scenario

EXIT_OK, EXIT_INVALID, EXIT_FAULT = 0, 1, 2


def _scenario(arg: str):
    """Load a scenario path, or a built-in scenario by name (e.g. ``reference``)."""
    path = Path(arg)
    if not path.exists() and arg in builtin_scenario_names():
        return builtin_scenario(arg)
    return load_scenario(path)


def _cmd_validate(args) -> int:
    sc = _scenario(args.scenario)
    print(f"ok: {args.scenario} ({len(sc.load.steps)} load segment(s), t_end={sc.solver.t_end:g} s)")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    sc = _scenario(args.scenario).with_solver(dt=args.dt, t_end=args.t_end)
    if any(v is not None for v in (args.kp, args.ki, args.droop)):
        kp, ki, droop = sc.gains
        sc = sc.with_gains((args.kp if args.kp is not None else kp,
                            args.ki if args.ki is not None else ki,
                            args.droop if args.droop is not None else droop))
    sc.validate()
    result = run_simulation(sc)
    out = write_simulation_outputs(result, args.out, plot=args.plot)
    print(result.summary.to_text(), end="")
    print(f"wrote {out / 'timeseries.csv'}")
    return EXIT_OK


def _cmd_tune(args) -> int:
    sc = _scenario(args.scenario)
    settings = sc.pso_settings(seed=args.seed, population=args.pop, iterations=args.iters,
                               workers=args.workers)

    def progress(it, best):
        if args.verbose:
            print(f"iter {it:4d}  best ISE {best:.6e}", file=sys.stderr)

    report = tune(sc, settings, progress=progress)
    out = write_tune_outputs(report, sc, args.out)
    print(report.to_text(), end="")
    print(f"wrote {out / 'convergence.csv'}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    path = write_gnuplot_script(args.timeseries, args.out)
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="winddiesel", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and validate a scenario file")
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=_cmd_validate)

    s = sub.add_parser("simulate", help="run a scenario and write timeseries.csv / summary.txt")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", type=float, dest="t_end")
    s.add_argument("--kp", type=float, help="override the scenario's proportional gain")
    s.add_argument("--ki", type=float, help="override the scenario's integral gain")
    s.add_argument("--droop", type=float, help="override the scenario's governor droop")
    s.add_argument("--plot", action="store_true", help="also write a gnuplot script")
    s.set_defaults(func=_cmd_simulate)

    t = sub.add_parser("tune", help="PSO-tune (kp, ki, droop) on a scenario")
    t.add_argument("--scenario", required=True)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--pop", type=int)
    t.add_argument("--iters", type=int)
    t.add_argument("--workers", type=int)
    t.add_argument("--out", required=True)
    t.add_argument("-v", "--verbose", action="store_true")
    t.set_defaults(func=_cmd_tune)

    g = sub.add_parser("plot", help="write a gnuplot script for a timeseries CSV")
    g.add_argument("--timeseries", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_plot)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SimulationFault as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
