"""Command-line entry point: plan, bench, plot and scenario generation."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import BenchConfig, ConfigError, PLANNER_NAMES, load_config
from .interaction import MissingTrajectory
from .kinematics import Infeasible
from .milp.model import ModelError, UnknownVehicle
from .planners import PlannerError, run_planner
from .road_network import NetworkFormatError, NoPath, UnknownVertex

EXIT_OK, EXIT_CONFIG, EXIT_PLANNER = 0, 2, 3
log = logging.getLogger("fleetplan")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fleetplan", description="Fleet trajectory planning on shared road networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    pl = sub.add_parser("plan", help="plan one scenario file")
    pl.add_argument("scenario")
    pl.add_argument("--planner", choices=PLANNER_NAMES)
    pl.add_argument("--dt", type=float)
    pl.add_argument("--out", default=".")
    pl.add_argument("--config", help="TOML file with planner settings")

    be = sub.add_parser("bench", help="run a scenario x planner matrix")
    be.add_argument("--config", required=True)
    be.add_argument("--out", help="output directory (overrides the config)")

    pt = sub.add_parser("plot", help="distance-time SVG of one vehicle in a result file")
    pt.add_argument("result")
    pt.add_argument("--vehicle", type=int, required=True)
    pt.add_argument("--out", help="SVG path (default next to the result)")
    pt.add_argument("--buffer", type=float, default=0.0)

    sc = sub.add_parser("scenario", help="write a generated scenario file")
    sc.add_argument("name", help="grid<n>, toy1, toy2, toy<v>_m<m> or mine[<seed>]")
    sc.add_argument("--out", required=True)
    sc.add_argument("--config")
    return p


def _cmd_plan(args) -> int:
    from .results import save_result
    from .scenarios import load_scenario

    cfg = load_config(args.config) if args.config else BenchConfig(planners=["interval"])
    planner = args.planner or cfg.planners[0]
    dt = args.dt if args.dt is not None else (cfg.dt if args.config else None)
    if dt is not None and not dt > 0:
        raise ConfigError("--dt must be positive")
    try:
        scenario = load_scenario(args.scenario)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", source=args.scenario) from None
    if dt is not None:
        scenario = scenario.with_dt(dt)
    result = run_planner(planner, scenario, cfg.planner)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = save_result(out / f"{scenario.label or 'scenario'}_{planner}.json", scenario, result)
    print(f"{planner}: total delay {result.total_delay:g} s, objective {result.objective:g} s, "
          f"{result.iterations} iteration(s), {result.wall_time:.3f} s -> {path}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .bench import run_matrix

    cfg = load_config(args.config)
    res = run_matrix(cfg, args.out)
    for name, path in res["paths"].items():
        print(f"{name}: {path}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .plot import plot_trajectory
    from .results import ResultFormatError, load_result

    try:
        scenario, result = load_result(args.result)
    except (ResultFormatError, NetworkFormatError) as exc:
        raise ConfigError(str(exc)) from None
    svg = plot_trajectory(scenario, result.trajectories, args.vehicle, args.buffer,
                          title=f"{result.planner}: vehicle {args.vehicle}")
    out = Path(args.out) if args.out else Path(args.result).with_suffix(f".v{args.vehicle}.svg")
    out.write_text(svg)
    print(out)
    return EXIT_OK


def _cmd_scenario(args) -> int:
    from .bench import build_scenario
    from .scenarios import save_scenario

    cfg = load_config(args.config) if args.config else BenchConfig()
    sc = build_scenario(args.name, cfg)
    save_scenario(sc, args.out)
    print(args.out)
    return EXIT_OK


def _message(exc) -> str:
    if isinstance(exc, KeyError) and exc.args:
        return str(exc.args[0])
    return str(exc)


COMMANDS = {"plan": _cmd_plan, "bench": _cmd_bench, "plot": _cmd_plot, "scenario": _cmd_scenario}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, NetworkFormatError, UnknownVertex, NoPath, UnknownVehicle) as exc:
        print(f"error: {_message(exc)}", file=sys.stderr)
        return EXIT_CONFIG
    except (PlannerError, ModelError, Infeasible, MissingTrajectory) as exc:
        print(f"planner failure: {_message(exc)}", file=sys.stderr)
        return EXIT_PLANNER


if __name__ == "__main__":
    sys.exit(main())
