"""Sequential avoidance heuristic with the waypoint resolver."""
from __future__ import annotations

import math
import time

from ..interaction import active_only, detect_active
from .base import NonTermination, PlannerConfig, PlanResult, PlannerError, relaxed_solutions, solve_single, tie_break_entering


def departure_step(n, vehicle, dt: float) -> int:
    """Step by which ``vehicle`` has cleared the intersection."""
    steps = n.steps_i if vehicle == n.vehicles[0] else n.steps_j
    occ = n.occupancy(vehicle)
    if steps is None or math.isinf(steps[1]) or occ is None or math.isinf(occ[1]):
        raise PlannerError(f"vehicle {vehicle} never leaves intersection {n.intersection}")
    return max(int(steps[1]), math.ceil(occ[1] / dt - 1e-9), 1)


def plan_heuristic(scenario, config: PlannerConfig | None = None) -> PlanResult:
    config = config or PlannerConfig()
    t0 = time.perf_counter()
    dt = scenario.dt
    stats: list = []
    traj = relaxed_solutions(scenario, config, stats)
    relaxed = {vid: t.arrival_step for vid, t in traj.items()}
    waypoints = {vid: [] for vid in traj}
    log = []
    resolutions = 0
    while True:
        active = active_only(detect_active(traj, scenario.geometry, 0.0))
        if not active:
            break
        if resolutions >= config.max_resolutions:
            raise NonTermination(f"{len(active)} interactions still active after {resolutions} resolutions")
        n0 = active[0]
        i, j = tie_break_entering(n0)
        x_js = n0.interval(j)[0]
        k = departure_step(n0, i, dt)
        waypoints[j].append((k, x_js))
        traj[j] = solve_single(scenario.vehicle(j), dt, config, waypoints[j], stats)
        resolutions += 1
        log.append({"intersection": n0.intersection, "kept": i, "adjusted": j, "step": k, "x_limit": x_js})
    return PlanResult("heuristic", traj, relaxed, dt, iterations=resolutions + 1, resolutions=resolutions,
                      solve_stats=stats, wall_time=time.perf_counter() - t0,
                      extra={"waypoints": waypoints, "log": log})
