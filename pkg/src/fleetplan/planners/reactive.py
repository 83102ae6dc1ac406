"""Reactive stop-and-go resolver on discrete bang-off-bang trajectories (no LP solves)."""
from __future__ import annotations

import time

import numpy as np

from ..interaction import POSITION_TOL, active_only, detect_active
from ..kinematics import Trajectory, discrete_min_time, from_velocities, stop_distance
from .base import NonTermination, PlannerConfig, PlannerError, PlanResult, tie_break_entering
from .heuristic import departure_step

STOP_MARGIN = 2 * POSITION_TOL


class CannotStop(PlannerError):
    """The vehicle is already too close to the stop line to brake before it."""


def nominal_trajectories(scenario) -> dict:
    cache = {}
    out = {}
    for veh in scenario.fleet:
        p = veh.params
        key = (veh.x_f, p)
        if key not in cache:
            cache[key] = discrete_min_time(veh.x_f, p.v0, p.vf, p, scenario.dt)
        t = cache[key]
        out[veh.id] = Trajectory(veh.id, t.dt, t.x.copy(), t.v.copy(), t.u.copy(), t.arrival_step)
    return out


def _latest_brake_step(traj: Trajectory, x_stop: float, before: int, params, dt: float) -> int | None:
    """Latest step <= ``before`` from which braking can still end at rest by ``x_stop``."""
    for k in range(min(before, len(traj.x) - 1), -1, -1):
        x, v = traj.state(k)
        if x <= x_stop and stop_distance(v, params, dt)[0] <= x_stop - x + 1e-9:
            return k
    return None


def stop_and_go(traj: Trajectory, x_stop: float, k_go: int, veh, dt: float) -> Trajectory:
    """Keep ``traj`` up to the last safe braking step, stop at ``x_stop``, resume at full speed from ``k_go``."""
    p = veh.params
    k_b = _latest_brake_step(traj, x_stop, k_go - 1, p, dt)
    if k_b is None:
        raise CannotStop(f"vehicle {veh.id} cannot stop before {x_stop:.3f}")
    x_b, v_b = traj.state(k_b)
    vel = list(traj.v[:k_b + 1])
    stop = discrete_min_time(max(x_stop - x_b, 0.0), v_b, 0.0, p, dt)
    vel += list(stop.v[1:])
    if len(vel) - 1 < k_go:
        vel += [0.0] * (k_go - (len(vel) - 1))
    vel = vel[:k_go + 1]
    head = from_velocities(float(traj.x[0]), vel, dt)
    x_go, v_go = float(head.x[-1]), float(head.v[-1])
    resume = discrete_min_time(max(veh.x_f - x_go, 0.0), v_go, p.vf, p, dt)
    vel += list(resume.v[1:])
    return from_velocities(float(traj.x[0]), np.array(vel), dt, veh.id, len(vel) - 1)


def plan_reactive(scenario, config: PlannerConfig | None = None) -> PlanResult:
    config = config or PlannerConfig()
    t0 = time.perf_counter()
    dt = scenario.dt
    traj = nominal_trajectories(scenario)
    relaxed = {vid: t.arrival_step for vid, t in traj.items()}
    degraded: set = set()   # pairs resolved at the exact boundary; checked without inflation
    log = []
    resolutions = 0
    while True:
        inflated = active_only(detect_active(traj, scenario.geometry, config.buffer))
        exact_keys = {n.key for n in active_only(detect_active(traj, scenario.geometry, 0.0))} if degraded else set()
        active = [n for n in inflated if n.key not in degraded or n.key in exact_keys]
        if not active:
            break
        if resolutions >= config.max_resolutions:
            raise NonTermination(f"{len(active)} interactions still active after {resolutions} resolutions")
        n0 = active[0]
        if n0.key in degraded:
            n0 = next(n for n in detect_active(traj, scenario.geometry, 0.0) if n.key == n0.key)
        i, j = tie_break_entering(n0)
        k_go = departure_step(n0, i, dt)
        veh = scenario.vehicle(j)
        x_stop = n0.interval(j)[0] - STOP_MARGIN
        flagged = False
        try:
            traj[j] = stop_and_go(traj[j], x_stop, k_go, veh, dt)
        except CannotStop:
            if n0.buffer == 0.0:
                raise
            flagged = True
            degraded.add(n0.key)
            x_stop = n0.interval(j)[0] + n0.buffer - STOP_MARGIN
            traj[j] = stop_and_go(traj[j], x_stop, k_go, veh, dt)
        resolutions += 1
        log.append({"intersection": n0.intersection, "kept": i, "adjusted": j, "step": k_go,
                    "x_stop": x_stop, "cannot_stop": flagged})
    return PlanResult("reactive", traj, relaxed, dt, iterations=resolutions + 1, resolutions=resolutions,
                      solve_stats=[], wall_time=time.perf_counter() - t0,
                      extra={"log": log, "cannot_stop": sum(e["cannot_stop"] for e in log),
                             "buffer": config.buffer})
