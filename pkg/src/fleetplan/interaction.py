"""Occupancy windows and active-interaction detection at crossing intersections.

Two notions of occupancy are tracked per vehicle and intersection:

* the continuous window ``[t_enter, t_exit]`` obtained by solving the per-step
  parabola for the interval boundaries, and
* the step window: the range of sampling intervals ``(t_{k-1}, t_k]`` during which
  the vehicle body may be inside the interval, judged from the samples only.

Activity is decided on step windows. They contain the continuous windows, and an
interaction is inactive exactly when the per-step avoidance disjunction used by the
MILP holds at every step, so detection and optimisation agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .kinematics import Trajectory, _curvature
from .road_network import Crossing

# positions within this distance of an interval boundary count as outside
POSITION_TOL = 1e-5


class MissingTrajectory(KeyError):
    pass


def _first_reach(traj: Trajectory, target: float) -> float | None:
    """Earliest time with x(t) >= target, None if never."""
    x = traj.x
    if x[0] >= target:
        return 0.0
    idx = np.nonzero(x >= target)[0]
    if len(idx) == 0:
        return None
    k = int(idx[0])
    dt = traj.dt
    x0, v0 = x[k - 1], traj.v[k - 1]
    a = _curvature(traj, k)
    gap = target - x0
    if abs(a) < 1e-12:
        tau = gap / v0 if v0 > 0 else dt
    else:
        disc = max(v0 * v0 + 4 * a * gap, 0.0)
        roots = [(-v0 + s * math.sqrt(disc)) / (2 * a) for s in (1, -1)]
        valid = [r for r in roots if -1e-12 <= r <= dt + 1e-12]
        tau = min(valid) if valid else dt
    return (k - 1) * dt + min(max(tau, 0.0), dt)


def occupancy_window(traj: Trajectory, interval) -> tuple[float, float] | None:
    """Continuous [t_enter, t_exit]; t_exit is inf if the vehicle never clears the interval."""
    xs, xe = interval
    t_enter = _first_reach(traj, xs)
    if t_enter is None:
        return None
    t_exit = _first_reach(traj, xe)
    return (t_enter, math.inf if t_exit is None else t_exit)


def step_window(traj: Trajectory, interval, tol: float = POSITION_TOL) -> tuple[int, float] | None:
    """First and last occupied sampling interval (1-based step index), last may be inf."""
    xs, xe = interval
    x = traj.x
    entered = x[1:] > xs + tol
    not_left = x[:-1] < xe - tol
    occ = np.nonzero(entered & not_left)[0]
    n = len(x) - 1
    if len(occ) == 0:
        # a vehicle parked inside the interval keeps occupying it
        if len(x) and xs + tol < x[-1] < xe - tol:
            return (n + 1, math.inf)
        return None
    first, last = int(occ[0]) + 1, int(occ[-1]) + 1
    if last == n and x[-1] < xe - tol:
        return (first, math.inf)
    return (first, last)


@dataclass(frozen=True)
class Interaction:
    vehicles: tuple
    intersection: str
    interval_i: tuple
    interval_j: tuple
    occupancy_i: tuple | None
    occupancy_j: tuple | None
    steps_i: tuple | None
    steps_j: tuple | None
    active: bool
    buffer: float = 0.0

    @property
    def start_time(self) -> float:
        ts = [o[0] for o in (self.occupancy_i, self.occupancy_j) if o is not None]
        return min(ts) if ts else math.inf

    @property
    def key(self) -> tuple:
        return (self.vehicles, self.intersection)

    def overlap_steps(self) -> tuple[int, float] | None:
        if self.steps_i is None or self.steps_j is None:
            return None
        lo = max(self.steps_i[0], self.steps_j[0])
        hi = min(self.steps_i[1], self.steps_j[1])
        return (lo, hi) if lo <= hi else None

    def occupancy(self, vehicle) -> tuple | None:
        return self.occupancy_i if vehicle == self.vehicles[0] else self.occupancy_j

    def interval(self, vehicle) -> tuple:
        return self.interval_i if vehicle == self.vehicles[0] else self.interval_j


def _inflate(interval, buffer):
    return (interval[0] - buffer, interval[1] + buffer)


def evaluate(crossing: Crossing, trajectories: dict, buffer: float = 0.0) -> Interaction:
    i, j = crossing.vehicles
    try:
        ti, tj = trajectories[i], trajectories[j]
    except KeyError as exc:
        raise MissingTrajectory(exc.args[0]) from None
    ii, ij = _inflate(crossing.interval_i, buffer), _inflate(crossing.interval_j, buffer)
    si, sj = step_window(ti, ii), step_window(tj, ij)
    active = si is not None and sj is not None and max(si[0], sj[0]) <= min(si[1], sj[1])
    return Interaction(
        crossing.vehicles, crossing.vertex, ii, ij,
        occupancy_window(ti, ii), occupancy_window(tj, ij), si, sj, active, buffer,
    )


def detect_active(trajectories: dict, geometry, buffer: float = 0.0) -> list[Interaction]:
    """Evaluate every crossing; sorted by earliest entry time, ties by vehicle pair."""
    out = [evaluate(c, trajectories, buffer) for c in geometry]
    out.sort(key=lambda n: (n.start_time, n.vehicles, n.intersection))
    return out


def active_only(interactions) -> list[Interaction]:
    return [n for n in interactions if n.active]


def exact(interaction: Interaction) -> Interaction:
    """Same record without the buffer inflation (for reporting)."""
    b = interaction.buffer
    return replace(interaction, interval_i=_inflate(interaction.interval_i, -b),
                   interval_j=_inflate(interaction.interval_j, -b), buffer=0.0)
