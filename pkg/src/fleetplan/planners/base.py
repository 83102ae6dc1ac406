"""Shared planner plumbing: results, configuration and single-vehicle solves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..interaction import active_only, detect_active
from ..kinematics import Trajectory, check_trajectory
from ..milp import OPTIMAL, add_progress_tiebreak, add_waypoint, build_single, get_backend, horizon_for, solve
from ..milp.model import EQ, LE


class PlannerError(RuntimeError):
    pass


class NonTermination(PlannerError):
    pass


@dataclass
class PlannerConfig:
    backend: str = "highs"
    buffer: float = 10.0          # reactive detection inflation (m)
    max_iterations: int = 50      # iterative MILP
    max_resolutions: int = 200    # heuristic / reactive
    goal_window: bool = True
    equality_waypoints: bool = False
    time_limit: float | None = None
    progress_tiebreak: bool = False   # fleet models; single-vehicle solves always use it

    def solver(self):
        if self.backend == "highs":
            return get_backend("highs", time_limit=self.time_limit)
        return get_backend(self.backend)


@dataclass
class PlanResult:
    planner: str
    trajectories: dict
    relaxed_steps: dict           # vehicle -> interaction-free arrival step
    dt: float
    iterations: int = 0
    constraint_steps_added: int = 0
    resolutions: int = 0
    solve_stats: list = field(default_factory=list)
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def arrivals(self) -> dict:
        return {vid: t.arrival_step for vid, t in self.trajectories.items()}

    @property
    def delays(self) -> dict:
        return {vid: (t.arrival_step - self.relaxed_steps[vid]) * self.dt for vid, t in self.trajectories.items()}

    @property
    def total_delay(self) -> float:
        return sum(self.delays.values())

    @property
    def objective(self) -> float:
        """Summed arrival times."""
        return sum(t.goal_time for t in self.trajectories.values())

    @property
    def nodes(self) -> int:
        return sum(s.get("nodes") or 0 for s in self.solve_stats)

    @property
    def solves(self) -> int:
        return len(self.solve_stats)

    @property
    def simplex_iterations(self) -> int:
        return sum(s.get("simplex_iterations") or 0 for s in self.solve_stats)


def solve_single(vehicle, dt: float, config: PlannerConfig, waypoints=(), stats: list | None = None) -> Trajectory:
    """Minimum-time trajectory of one vehicle subject to waypoint rows ``(k, x_limit)``."""
    x_f, params = vehicle.x_f, vehicle.params
    K = horizon_for(x_f, params, dt)
    if waypoints:
        K = max(K, max(k for k, _ in waypoints) + math.ceil(K / 3) + 2)
    model = build_single(x_f, params, dt, K, vehicle.id, goal_cuts=False)
    sense = EQ if config.equality_waypoints else LE
    for k, x_limit in waypoints:
        add_waypoint(model, vehicle.id, k, x_limit, sense)
    add_progress_tiebreak(model)
    res = solve(model, config.solver())
    if stats is not None:
        stats.append(dict(res.stats, kind="single", vehicle=vehicle.id))
    if res.status != OPTIMAL:
        raise PlannerError(f"single-vehicle solve for {vehicle.id} returned {res.status}")
    return model.decode(res.values)[vehicle.id]


def relaxed_solutions(scenario, config: PlannerConfig, stats: list | None = None) -> dict:
    """Interaction-free trajectories; identical single-vehicle problems are solved once."""
    cache = {}
    out = {}
    for veh in scenario.fleet:
        key = (veh.x_f, veh.params)
        if key not in cache:
            cache[key] = solve_single(veh, scenario.dt, config, stats=stats)
        t = cache[key]
        out[veh.id] = Trajectory(veh.id, t.dt, t.x.copy(), t.v.copy(), t.u.copy(), t.arrival_step)
    return out


def tie_break_entering(n, ids=None) -> tuple:
    """(non-adjusting, adjusting): earlier entry goes first, exact ties to the smaller id."""
    i, j = n.vehicles
    ti, tj = n.occupancy_i[0], n.occupancy_j[0]
    if tj < ti - 1e-9 or (abs(ti - tj) <= 1e-9 and j < i):
        return j, i
    return i, j


def assert_safe(scenario, trajectories: dict) -> None:
    act = active_only(detect_active(trajectories, scenario.geometry, 0.0))
    if act:
        raise PlannerError(f"{len(act)} active interaction(s) remain, first {act[0].key}")


def validate_result(scenario, result: PlanResult) -> list[str]:
    problems = []
    for veh in scenario.fleet:
        tr = result.trajectories[veh.id]
        problems += [f"vehicle {veh.id}: {p}" for p in check_trajectory(tr, veh.params, veh.x_f)]
    act = active_only(detect_active(result.trajectories, scenario.geometry, 0.0))
    problems += [f"active interaction {n.key}" for n in act]
    return problems
