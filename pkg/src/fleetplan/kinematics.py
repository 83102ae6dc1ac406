"""Discrete double-integrator trajectories and minimum-time bang-off-bang profiles.

State is indexed k = 0..N and controls k = 1..N; ``u[0]`` is stored as 0.
Within step k the acceleration u[k] is constant, so

    v[k] = v[k-1] + u[k] * dt
    x[k] = x[k-1] + (v[k] + v[k-1]) / 2 * dt

holds exactly, and the continuous motion between samples is a parabola.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .road_network import VehicleParams


class Infeasible(ValueError):
    """No trajectory joins the requested boundary states."""


@dataclass
class Trajectory:
    vehicle: int
    dt: float
    x: np.ndarray
    v: np.ndarray
    u: np.ndarray
    arrival_step: int | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.arrival_step is None:
            self.arrival_step = len(self.x) - 1

    def __len__(self):
        return len(self.x)

    @property
    def goal_time(self) -> float:
        return self.arrival_step * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.x)) * self.dt

    @property
    def samples(self) -> list[tuple[int, float, float, float]]:
        return [(k, float(x), float(v), float(u)) for k, (x, v, u) in enumerate(zip(self.x, self.v, self.u))]

    def state(self, k: int) -> tuple[float, float]:
        """State at step k; past the last sample the vehicle holds its final state."""
        k = min(k, len(self.x) - 1)
        return float(self.x[k]), float(self.v[k])

    def position_at(self, t: float) -> float:
        k = int(math.floor(t / self.dt))
        if k >= len(self.x) - 1:
            return float(self.x[-1])
        if k < 0:
            return float(self.x[0])
        tau = t - k * self.dt
        x0, v0 = self.x[k], self.v[k]
        return float(x0 + v0 * tau + _curvature(self, k + 1) * tau * tau)

    def extended(self, n: int) -> "Trajectory":
        """Copy padded with rest-at-final-state samples up to n samples."""
        extra = n - len(self.x)
        if extra <= 0:
            return self
        return Trajectory(
            self.vehicle, self.dt,
            np.concatenate([self.x, np.full(extra, self.x[-1])]),
            np.concatenate([self.v, np.full(extra, self.v[-1])]),
            np.concatenate([self.u, np.zeros(extra)]),
            self.arrival_step,
        )


def _curvature(traj: Trajectory, k: int) -> float:
    """Quadratic coefficient of the motion inside step k (equals u/2 for exact trajectories)."""
    dt = traj.dt
    return (traj.x[k] - traj.x[k - 1] - traj.v[k - 1] * dt) / (dt * dt)


def propagate(x0: float, v0: float, controls, dt: float, vehicle: int = 0) -> Trajectory:
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = len(controls)
    x = np.empty(n + 1)
    v = np.empty(n + 1)
    u = np.zeros(n + 1)
    x[0], v[0] = x0, v0
    for k in range(1, n + 1):
        u[k] = controls[k - 1]
        v[k] = v[k - 1] + u[k] * dt
        x[k] = x[k - 1] + (v[k] + v[k - 1]) / 2 * dt
    return Trajectory(vehicle, dt, x, v, u)


def from_velocities(x0: float, velocities, dt: float, vehicle: int = 0, arrival_step=None) -> Trajectory:
    """Exact trajectory from a velocity sequence; controls are its scaled differences."""
    v = np.asarray(velocities, dtype=float).copy()
    u = np.zeros_like(v)
    u[1:] = np.diff(v) / dt
    x = np.empty_like(v)
    x[0] = x0
    for k in range(1, len(v)):
        x[k] = x[k - 1] + (v[k] + v[k - 1]) / 2 * dt
    return Trajectory(vehicle, dt, x, v, u, arrival_step)


def dynamics_residual(traj: Trajectory) -> float:
    """Largest absolute violation of the step equations."""
    if len(traj) < 2:
        return 0.0
    dt = traj.dt
    rv = traj.v[1:] - traj.v[:-1] - traj.u[1:] * dt
    rx = traj.x[1:] - traj.x[:-1] - (traj.v[1:] + traj.v[:-1]) / 2 * dt
    return float(max(np.abs(rv).max(), np.abs(rx).max()))


def check_trajectory(traj: Trajectory, params: VehicleParams, x_f: float | None = None,
                     residual_tol: float = 1e-9, bound_tol: float = 1e-6) -> list[str]:
    """Return a list of human-readable violations (empty when valid)."""
    problems = []
    res = dynamics_residual(traj)
    if res > residual_tol:
        problems.append(f"dynamics residual {res:.3g}")
    if traj.v.min() < -bound_tol or traj.v.max() > params.v_max + bound_tol:
        problems.append(f"velocity outside [0, {params.v_max}]")
    if len(traj) > 1:
        u = traj.u[1:]
        if u.min() < params.decel - bound_tol or u.max() > params.accel + bound_tol:
            problems.append(f"acceleration outside [{params.decel}, {params.accel}]")
    if np.any(np.diff(traj.x) < -bound_tol):
        problems.append("position decreases")
    if x_f is not None:
        k = traj.arrival_step
        if abs(traj.x[k] - x_f) > bound_tol or abs(traj.v[k] - params.vf) > bound_tol:
            problems.append(f"not at goal at arrival step {k}")
    return problems


# -- continuous minimum-time profile -------------------------------------------------

@dataclass(frozen=True)
class Phase:
    kind: str  # "accel" | "cruise" | "decel"
    duration: float
    accel: float


@dataclass(frozen=True)
class TpbvpProfile:
    x_f: float
    v0: float
    vf: float
    phases: tuple = field(default_factory=tuple)

    @property
    def T(self) -> float:
        return sum(p.duration for p in self.phases)

    @property
    def peak_velocity(self) -> float:
        v = self.v0
        for p in self.phases:
            if p.kind == "accel":
                v += p.accel * p.duration
        return v

    def state(self, t: float) -> tuple[float, float]:
        x, v = 0.0, self.v0
        for p in self.phases:
            tau = min(max(t, 0.0), p.duration)
            x += v * tau + 0.5 * p.accel * tau * tau
            v += p.accel * tau
            t -= p.duration
            if t <= 0:
                break
        return x, v


def min_time_tpbvp(x_f: float, v0: float, vf: float, params: VehicleParams) -> TpbvpProfile:
    """Minimum-time accelerate/cruise/brake profile covering exactly ``x_f``."""
    if x_f < 0:
        raise ValueError("x_f must be non-negative")
    a, d, vmax = params.accel, -params.decel, params.v_max
    if not (0 <= v0 <= vmax and 0 <= vf <= vmax):
        raise Infeasible("boundary velocity outside [0, v_max]")
    peak_sq = (x_f + v0 * v0 / (2 * a) + vf * vf / (2 * d)) / (1 / (2 * a) + 1 / (2 * d))
    if peak_sq < max(v0, vf) ** 2 - 1e-9:
        raise Infeasible(f"cannot change speed {v0} -> {vf} within {x_f} m")
    peak = math.sqrt(max(peak_sq, max(v0, vf) ** 2))
    phases = []
    if peak >= vmax:
        d_acc = (vmax * vmax - v0 * v0) / (2 * a)
        d_dec = (vmax * vmax - vf * vf) / (2 * d)
        phases.append(Phase("accel", (vmax - v0) / a, a))
        phases.append(Phase("cruise", (x_f - d_acc - d_dec) / vmax, 0.0))
        phases.append(Phase("decel", (vmax - vf) / d, -d))
    else:
        phases.append(Phase("accel", (peak - v0) / a, a))
        phases.append(Phase("decel", (peak - vf) / d, -d))
    phases = tuple(p for p in phases if p.duration > 0)
    return TpbvpProfile(x_f, v0, vf, phases)


def sample_tpbvp(profile: TpbvpProfile, dt: float, vehicle: int = 0) -> Trajectory:
    """Sample a continuous profile on the dt grid; the last sample holds the goal state.

    Positions are exact samples of the continuous motion, so the step equations hold
    only on steps without a phase switch.
    """
    T = profile.T
    n = max(0, math.ceil(T / dt - 1e-9))
    x = np.empty(n + 1)
    v = np.empty(n + 1)
    for k in range(n):
        x[k], v[k] = profile.state(k * dt)
    x[n], v[n] = profile.x_f, profile.vf
    u = np.zeros(n + 1)
    u[1:] = np.diff(v) / dt
    return Trajectory(vehicle, dt, x, v, u, n)


# -- discrete minimum-time profile ------------------------------------------------

def _envelopes(n: int, v0: float, vf: float, params: VehicleParams, dt: float):
    k = np.arange(n + 1)
    a, d = params.accel * dt, -params.decel * dt
    hi = np.minimum.reduce([np.full(n + 1, params.v_max), v0 + a * k, vf + d * (n - k)])
    lo = np.maximum.reduce([np.zeros(n + 1), v0 - d * k, vf - a * (n - k)])
    return lo, hi


def _distance(v: np.ndarray, dt: float) -> float:
    return float(dt * (v[1:] + v[:-1]).sum() / 2)


def discrete_min_time(x_f: float, v0: float, vf: float, params: VehicleParams, dt: float,
                      vehicle: int = 0, max_steps: int = 100000) -> Trajectory:
    """Fewest-step exact trajectory to (x_f, vf), arrival no earlier than step 1.

    The velocity profile is clip(c, lo, hi): full acceleration, a cruise at speed c and
    full braking, with c chosen so the distance is met exactly on a step boundary.
    """
    T = min_time_tpbvp(x_f, v0, vf, params).T
    n = max(1, int(math.floor(T / dt + 1e-9)))
    while n <= max_steps:
        lo, hi = _envelopes(n, v0, vf, params, dt)
        d_lo = _distance(lo, dt)
        if np.all(lo <= hi + 1e-12) and d_lo <= x_f + 1e-9 and _distance(hi, dt) >= x_f - 1e-9:
            break
        # once the slowest profile rests at zero, more steps only add rest samples
        if d_lo > x_f + 1e-9 and lo.min() <= 0 and np.all(lo <= hi + 1e-12):
            raise Infeasible(f"cannot cover {x_f} m between speeds {v0} and {vf} on a {dt} s grid")
        n += 1
    else:
        raise Infeasible("no discrete trajectory within max_steps")
    c = _cruise_speed(lo, hi, x_f, dt)
    v = np.clip(c, lo, hi)
    v[0], v[-1] = v0, vf
    traj = from_velocities(0.0, v, dt, vehicle, n)
    return traj


def _cruise_speed(lo, hi, x_f, dt) -> float:
    a, b = float(lo.min()), float(hi.max())
    if _distance(hi, dt) <= x_f:
        return b
    for _ in range(200):
        mid = 0.5 * (a + b)
        if _distance(np.clip(mid, lo, hi), dt) < x_f:
            a = mid
        else:
            b = mid
    c = 0.5 * (a + b)
    # distance is affine in c on the set of clipped-free samples: finish exactly
    free = (lo < c) & (hi > c)
    if free.any():
        w = np.zeros_like(lo)
        w[free] = 1.0
        slope = dt * (w[1:] + w[:-1]).sum() / 2
        base = _distance(np.where(free, 0.0, np.clip(c, lo, hi)), dt)
        c_exact = (x_f - base) / slope
        if np.all((np.clip(c_exact, lo, hi) == c_exact) | ~free):
            c = c_exact
    return c


def stop_distance(v: float, params: VehicleParams, dt: float) -> tuple[float, int]:
    """Distance and number of steps to brake from v to rest at full deceleration."""
    d = -params.decel * dt
    dist, steps = 0.0, 0
    while v > 1e-12:
        nv = max(0.0, v - d)
        dist += (v + nv) / 2 * dt
        v = nv
        steps += 1
    return dist, steps
