"""Scenario x planner benchmark matrix and the objective-function comparison."""
from __future__ import annotations

import csv
import io
import statistics
import time
from pathlib import Path

from .config import SCENARIO_RE, BenchConfig, ConfigError
from .interaction import active_only, detect_active
from .milp import OPTIMAL, add_avoidance, apply_goal_window, build_distance_objective, build_fleet, horizon_for, solve
from .planners import PlannerConfig, PlannerError, run_planner
from .planners.milp import compute_goal_window
from .scenarios import Scenario, make_grid, make_random_mine, make_toy_case

SCHEMA = "v1"
ROW_FIELDS = ["scenario", "planner", "repetition", "vehicles", "crossings", "delay_s", "objective_s",
              "iterations", "resolutions", "binaries", "constraint_steps", "solves", "nodes",
              "wall_time_s"]
TIME_FIELDS = {"wall_time_s"}
MILP_PLANNERS = ("full", "interval", "midpoint")


def build_scenario(name: str, config: BenchConfig) -> Scenario:
    m = SCENARIO_RE.match(name)
    if not m:
        raise ConfigError(f"unknown scenario {name!r}")
    p, r, dt = config.vehicle, config.intersection_half_width, config.dt
    if m.group("n"):
        return make_grid(int(m.group("n")), dt, p, r)
    if m.group("variant"):
        k = int(m.group("m")) if m.group("m") else 3
        return make_toy_case(int(m.group("variant")), k, dt, p, r)
    seed = int(m.group("seed")) if m.group("seed") else config.seed
    return make_random_mine(seed, config.mine_vertices, config.mine_vehicles, dt, p, r)


def result_row(scenario: Scenario, planner: str, rep: int, res) -> dict:
    return {
        "scenario": scenario.label, "planner": planner, "repetition": rep,
        "vehicles": len(scenario.fleet), "crossings": len(scenario.geometry),
        "delay_s": f"{res.total_delay:.6g}", "objective_s": f"{res.objective:.6g}",
        "iterations": res.iterations, "resolutions": res.resolutions,
        "binaries": res.extra.get("binaries", 0), "constraint_steps": res.constraint_steps_added,
        "solves": res.solves, "nodes": res.nodes,
        "wall_time_s": f"{res.wall_time:.6f}",
    }


def _csv_text(fields, rows, title: str) -> str:
    buf = io.StringIO()
    buf.write(f"# fleetplan {title} {SCHEMA}\n")
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def strip_time_columns(text: str) -> str:
    """CSV text without wall-clock columns (for determinism checks)."""
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        return ""
    keep = [i for i, h in enumerate(rows[0]) if h not in TIME_FIELDS and not h.endswith("_time_s")]
    return "\n".join(",".join(r[i] for i in keep) for r in rows) + "\n"


def run_matrix(config: BenchConfig, out_dir=None) -> dict:
    """Run every (scenario, planner, repetition) cell; write the CSVs; return their paths and rows."""
    if not config.planners:
        raise ConfigError("planner list is empty")
    if not config.scenarios:
        raise ConfigError("scenario list is empty")
    out = Path(out_dir if out_dir is not None else config.output)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in config.scenarios:
        sc = build_scenario(name, config)
        for planner in config.planners:
            for rep in range(config.repetitions):
                res = run_planner(planner, sc, config.planner)
                rows.append(result_row(sc, planner, rep, res))

    times, delays = {}, {}
    sizes = {}
    for r in rows:
        key = r["scenario"]
        sizes[key] = r["vehicles"]
        times.setdefault(key, {}).setdefault(r["planner"], []).append(float(r["wall_time_s"]))
        delays.setdefault(key, {})[r["planner"]] = r["delay_s"]
    order = list(dict.fromkeys(r["scenario"] for r in rows))
    table = [{"scenario": s, **{f"{p}_time_s": f"{statistics.median(times[s][p]):.6f}"
                                for p in config.planners}} for s in order]
    curve = [{"scenario": s, "vehicles": sizes[s], **{f"{p}_delay_s": delays[s][p] for p in config.planners}}
             for s in order]
    paths = {
        "rows": out / "rows.csv",
        "times": out / "computation_times.csv",
        "delays": out / "delay_vs_size.csv",
    }
    paths["rows"].write_text(_csv_text(ROW_FIELDS, rows, "bench-rows"))
    paths["times"].write_text(_csv_text(["scenario"] + [f"{p}_time_s" for p in config.planners], table,
                                        "computation-times"))
    paths["delays"].write_text(_csv_text(["scenario", "vehicles"] + [f"{p}_delay_s" for p in config.planners],
                                         curve, "delay-vs-size"))
    return {"paths": paths, "rows": rows}


# -- objective-function comparison ---------------------------------------------------

def _of_variant(scenario: Scenario, K: int, windows, distance: bool, config: PlannerConfig) -> dict:
    model = build_fleet(((v.id, v.x_f, v.params) for v in scenario.fleet), scenario.dt, K)
    if windows:
        for w in windows.values():
            apply_goal_window(model, w)
    for crossing in scenario.geometry:
        add_avoidance(model, crossing, range(1, K + 1))
    if distance:
        build_distance_objective(model, windows)
    t0 = time.perf_counter()
    res = solve(model, config.solver())
    wall = time.perf_counter() - t0
    if res.status != OPTIMAL:
        raise PlannerError(f"objective comparison solve returned {res.status}")
    traj = model.decode(res.values)
    if active_only(detect_active(traj, scenario.geometry, 0.0)):
        raise PlannerError("objective comparison produced an unsafe plan")
    return {
        "binaries": len(model.free_binaries()), "goal_binaries": len(model.goal_binaries()),
        "free_goal_binaries": len(model.free_goal_binaries()), "wall_time_s": wall,
        "arrivals": {vid: t.arrival_step for vid, t in traj.items()},
        "arrival_time_sum": sum(t.goal_time for t in traj.values()),
    }


def compare_objectives(scenario: Scenario, config: PlannerConfig | None = None, strict: bool = True) -> dict:
    """Time objective over the full horizon, time objective with narrow goal windows, and
    the distance objective with the same windows; full-range avoidance in all three."""
    config = config or PlannerConfig()
    windows, K, _ = compute_goal_window(scenario, config)
    K_full = max(K, max(horizon_for(v.x_f, v.params, scenario.dt) for v in scenario.fleet))
    report = {
        "scenario": scenario.label,
        "time_full": _of_variant(scenario, K_full, None, False, config),
        "time_window": _of_variant(scenario, K, windows, False, config),
        "distance": _of_variant(scenario, K, windows, True, config),
    }
    # symmetric instances have alternative optima that swap who yields, so the sorted
    # arrival profiles are compared rather than per-vehicle steps
    ref = sorted(report["time_window"]["arrivals"].values())
    report["max_arrival_gap"] = max(
        (abs(a - b) for v in ("time_full", "distance")
         for a, b in zip(sorted(report[v]["arrivals"].values()), ref)), default=0)
    report["agree"] = report["max_arrival_gap"] <= 1
    if strict and not report["agree"]:
        raise PlannerError(f"objective variants disagree by {report['max_arrival_gap']} steps")
    return report
