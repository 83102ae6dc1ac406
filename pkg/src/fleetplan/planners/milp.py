"""Exact fleet planners: monolithic full-range MILP and the lazy iterative MILP."""
from __future__ import annotations

import math
import time

from ..interaction import active_only, detect_active
from ..milp import (OPTIMAL, GoalWindow, add_avoidance, add_progress_tiebreak, apply_goal_window,
                    build_fleet, horizon_for, solve)
from .base import NonTermination, PlannerConfig, PlanResult, PlannerError, assert_safe
from .heuristic import plan_heuristic

MIDPOINT, INTERVAL = "midpoint", "interval"
HORIZON_MARGIN = 5.0  # seconds added to the heuristic-derived horizon


def compute_goal_window(scenario, config: PlannerConfig | None = None, heuristic: PlanResult | None = None):
    """Per-vehicle arrival windows, the horizon K and the heuristic run they came from."""
    config = config or PlannerConfig()
    heuristic = heuristic or plan_heuristic(scenario, config)
    dt = scenario.dt
    lower = heuristic.relaxed_steps
    total = sum(heuristic.arrivals[vid] - lower[vid] for vid in lower)
    windows = {vid: GoalWindow(vid, lower[vid], lower[vid] + total) for vid in lower}
    K = math.ceil((max(lower.values()) * dt + total * dt + HORIZON_MARGIN) / dt - 1e-9)
    return windows, K, heuristic


def _fleet_model(scenario, K, windows):
    model = build_fleet(((v.id, v.x_f, v.params) for v in scenario.fleet), scenario.dt, K)
    if windows:
        for w in windows.values():
            apply_goal_window(model, w)
    return model


def _setup(scenario, config):
    if config.goal_window:
        windows, K, heur = compute_goal_window(scenario, config)
        return windows, K, heur
    K = max(horizon_for(v.x_f, v.params, scenario.dt) for v in scenario.fleet)
    return None, K, None


def _solve(model, config, stats, label):
    res = solve(model, config.solver())
    stats.append(dict(res.stats, kind=label, binaries=len(model.free_binaries()), rows=len(model.rows)))
    if res.status != OPTIMAL:
        raise PlannerError(f"{label} solve returned {res.status}")
    return res


def _relaxed_steps(scenario, windows, trajectories):
    if windows:
        return {vid: w.lb_step for vid, w in windows.items()}
    from .base import relaxed_solutions
    return {vid: t.arrival_step for vid, t in relaxed_solutions(scenario, PlannerConfig()).items()}


def plan_full_range(scenario, config: PlannerConfig | None = None) -> PlanResult:
    """Avoidance disjunction at every step for every crossing pair, solved once."""
    config = config or PlannerConfig()
    t0 = time.perf_counter()
    windows, K, heur = _setup(scenario, config)
    model = _fleet_model(scenario, K, windows)
    steps = range(1, K + 1)
    for crossing in scenario.geometry:
        add_avoidance(model, crossing, steps)
    if config.progress_tiebreak:
        add_progress_tiebreak(model)
    stats = []
    res = _solve(model, config, stats, "full")
    traj = model.decode(res.values)
    assert_safe(scenario, traj)
    return PlanResult("full", traj, _relaxed_steps(scenario, windows, traj), scenario.dt, iterations=1,
                      constraint_steps_added=model.avoidance_steps(), solve_stats=stats,
                      wall_time=time.perf_counter() - t0,
                      extra={"K": K, "binaries": len(model.free_binaries()),
                             "goal_binaries": len(model.free_goal_binaries()),
                             "heuristic_time": heur.wall_time if heur else 0.0})


def target_steps(n, mode: str, dt: float, K: int) -> list[int]:
    """Steps at which to enforce avoidance for an active interaction."""
    ov = n.overlap_steps()
    if mode == MIDPOINT:
        lo, hi = ov
        hi = min(hi, K)
        return [min(max((lo + int(hi) + 1) // 2, 1), K)]
    if mode == INTERVAL:
        first = min(n.steps_i[0], n.steps_j[0])
        last = max(n.steps_i[1], n.steps_j[1])
        last = K if math.isinf(last) else int(last)
        return list(range(max(first - 1, 1), min(last + 1, K) + 1))
    raise ValueError(f"unknown targeting mode {mode!r}")


def plan_iterative(scenario, mode: str = INTERVAL, config: PlannerConfig | None = None) -> PlanResult:
    """Lazy avoidance constraints: solve relaxed, constrain active interactions, repeat."""
    config = config or PlannerConfig()
    t0 = time.perf_counter()
    windows, K, heur = _setup(scenario, config)
    model = _fleet_model(scenario, K, windows)
    if config.progress_tiebreak:
        add_progress_tiebreak(model)
    stats = []
    by_key = {(c.vehicles, c.vertex): c for c in scenario.geometry}
    history = []
    res = _solve(model, config, stats, "iter")
    traj = model.decode(res.values)
    iterations = 1
    while True:
        active = active_only(detect_active(traj, scenario.geometry, 0.0))
        if not active:
            break
        if iterations >= config.max_iterations:
            raise NonTermination(f"{len(active)} interactions active after {iterations} solves")
        added = 0
        for n in active:
            added += add_avoidance(model, by_key[n.key], target_steps(n, mode, scenario.dt, K))
        if added == 0:
            raise NonTermination("no new avoidance steps for active interactions")
        history.append(added)
        res = _solve(model, config, stats, "iter")
        traj = model.decode(res.values)
        iterations += 1
    return PlanResult(mode, traj, _relaxed_steps(scenario, windows, traj), scenario.dt, iterations=iterations,
                      constraint_steps_added=model.avoidance_steps(), solve_stats=stats,
                      wall_time=time.perf_counter() - t0,
                      extra={"K": K, "binaries": len(model.free_binaries()), "added_per_iteration": history,
                             "goal_binaries": len(model.free_goal_binaries()),
                             "heuristic_time": heur.wall_time if heur else 0.0})
