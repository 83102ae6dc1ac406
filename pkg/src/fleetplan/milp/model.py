"""Solver-agnostic MILP for fleet trajectories on fixed paths.

Per vehicle i and step k = 1..K there are continuous x, v, u and a goal binary b.
The initial state (k = 0) is a constant folded into the right-hand sides.

Rows:
  dynamics    v_k - v_{k-1} - dt u_k = 0,  x_k - x_{k-1} - dt/2 (v_k + v_{k-1}) = 0
  goal        |x_k - x_f| <= M_x (1 - b_k),  |v_k - v_f| <= M_v (1 - b_k),  sum_k b_k = 1
  avoidance   x_{i,k} <= x_is + M c1,  x_{i,k-1} >= x_ie - M c2,
              x_{j,k} <= x_js + M c3,  x_{j,k-1} >= x_je - M c4,  c1 + c2 + c3 + c4 <= 3
  objective   sum_i sum_k dt k b_{i,k}

The "after the interval" avoidance rows look at the start of the step, so each step
constrains the whole sampling interval (t_{k-1}, t_k] rather than a single instant.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from ..kinematics import Trajectory, from_velocities, min_time_tpbvp
from ..road_network import VehicleParams

LE, GE, EQ = "<=", ">=", "="


class ModelError(ValueError):
    pass


class HorizonTooShort(ModelError):
    pass


class UnknownVehicle(ModelError, KeyError):
    pass


class EmptyWindow(ModelError):
    pass


class NonzeroFinalVelocity(ModelError):
    pass


@dataclass(frozen=True)
class GoalWindow:
    vehicle: int
    lb_step: int
    ub_step: int

    def __post_init__(self):
        if not 1 <= self.lb_step <= self.ub_step:
            raise ValueError(f"invalid goal window {self.lb_step}..{self.ub_step}")


@dataclass
class VehicleBlock:
    vehicle: int
    x_f: float
    params: VehicleParams
    x0: float
    x: list  # variable index per step, x[0] is None (constant)
    v: list
    u: list
    b: list  # goal binaries, b[0] is None; empty when removed
    x_ub: float
    window: GoalWindow | None = None
    arrived: list = field(default_factory=lambda: [None])  # running sum of b


@dataclass
class Row:
    coefs: dict
    sense: str
    rhs: float
    tag: str = ""


@dataclass
class MilpModel:
    dt: float
    K: int
    names: list = field(default_factory=list)
    lb: list = field(default_factory=list)
    ub: list = field(default_factory=list)
    binary: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    obj_constant: float = 0.0
    vehicles: dict = field(default_factory=dict)
    avoidance: dict = field(default_factory=dict)  # (pair, vertex) -> {step: selector indices}
    objective_kind: str = "time"
    tiebreak_weight: float = 0.0
    goal_cuts: bool = True

    # -- primitives -------------------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.names)

    def add_var(self, name: str, lb: float, ub: float, binary: bool = False) -> int:
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.binary.append(binary)
        return len(self.names) - 1

    def add_row(self, terms, sense: str, rhs: float, tag: str = "") -> Row:
        coefs: dict[int, float] = {}
        const = 0.0
        for idx, coef in terms:
            if idx is None:
                const += coef
            else:
                coefs[idx] = coefs.get(idx, 0.0) + coef
        row = Row(coefs, sense, float(rhs - const), tag)
        self.rows.append(row)
        return row

    def block(self, vehicle) -> VehicleBlock:
        try:
            return self.vehicles[vehicle]
        except KeyError:
            raise UnknownVehicle(vehicle) from None

    def term(self, vehicle, name: str, k: int, coef: float = 1.0):
        """(index, coef) for a state variable, or (None, value*coef) at k = 0."""
        blk = self.block(vehicle)
        if k == 0:
            value = blk.x0 if name == "x" else blk.params.v0
            return (None, coef * value)
        return (getattr(blk, name)[k], coef)

    def binaries(self) -> list[int]:
        return [i for i, b in enumerate(self.binary) if b]

    def free_binaries(self) -> list[int]:
        return [i for i in self.binaries() if self.ub[i] > self.lb[i]]

    def goal_binaries(self) -> list[int]:
        return [i for blk in self.vehicles.values() for i in blk.b[1:]]

    def free_goal_binaries(self) -> list[int]:
        return [i for i in self.goal_binaries() if self.ub[i] > self.lb[i]]

    def avoidance_steps(self) -> int:
        return sum(len(s) for s in self.avoidance.values())

    # -- vehicles -----------------------------------------------------------------
    def add_vehicle(self, vehicle: int, x_f: float, params: VehicleParams, x0: float = 0.0) -> VehicleBlock:
        if vehicle in self.vehicles:
            raise ModelError(f"vehicle {vehicle} already in model")
        K, dt = self.K, self.dt
        T = min_time_tpbvp(x_f - x0, params.v0, params.vf, params).T
        if K * dt < T - 1e-9:
            raise HorizonTooShort(f"vehicle {vehicle}: K*dt = {K * dt} < minimum time {T:.3f}")
        # with a moving final state the vehicle drives on past the goal after arrival
        x_ub = x_f if params.vf == 0 else x_f + params.v_max * K * dt
        blk = VehicleBlock(vehicle, float(x_f), params, float(x0), [None], [None], [None], [None], x_ub)
        for k in range(1, K + 1):
            blk.x.append(self.add_var(f"x_{vehicle}_{k}", x0, x_ub))
            blk.v.append(self.add_var(f"v_{vehicle}_{k}", 0.0, params.v_max))
            blk.u.append(self.add_var(f"u_{vehicle}_{k}", params.decel, params.accel))
        for k in range(1, K + 1):
            blk.b.append(self.add_var(f"b_{vehicle}_{k}", 0, 1, binary=True))
        self.vehicles[vehicle] = blk
        for k in range(1, K + 1):
            self.add_row([self.term(vehicle, "v", k), self.term(vehicle, "v", k - 1, -1.0),
                          (blk.u[k], -dt)], EQ, 0.0, "dyn")
            self.add_row([self.term(vehicle, "x", k), self.term(vehicle, "x", k - 1, -1.0),
                          self.term(vehicle, "v", k, -dt / 2), self.term(vehicle, "v", k - 1, -dt / 2)],
                         EQ, 0.0, "dyn")
        mx = max(x_f - x0, x_ub - x_f)
        mv = params.v_max
        for k in range(1, K + 1):
            xk, vk, bk = blk.x[k], blk.v[k], blk.b[k]
            self.add_row([(xk, 1.0), (bk, mx)], LE, x_f + mx, "goal")
            self.add_row([(xk, 1.0), (bk, -mx)], GE, x_f - mx, "goal")
            self.add_row([(vk, 1.0), (bk, mv)], LE, params.vf + mv, "goal")
            self.add_row([(vk, 1.0), (bk, -mv)], GE, params.vf - mv, "goal")
        self.add_row([(blk.b[k], 1.0) for k in range(1, K + 1)], EQ, 1.0, "goal")
        # positions never decrease, so arrival by step k pins x_k past the goal (and v_k
        # at rest when the goal is a stop); implied by the rows above at integer b
        for k in range(1, K + 1 if self.goal_cuts else 1):
            a = self.add_var(f"a_{vehicle}_{k}", 0.0, 1.0)
            blk.arrived.append(a)
            prev = [(blk.arrived[k - 1], -1.0)] if k > 1 else []
            self.add_row([(a, 1.0), (blk.b[k], -1.0)] + prev, EQ, 0.0, "goal_cut")
            self.add_row([(blk.x[k], 1.0), (a, -(x_f - x0))], GE, x0, "goal_cut")
            if params.vf == 0:
                self.add_row([(blk.v[k], 1.0), (a, mv)], LE, mv, "goal_cut")
        for k in range(1, K + 1):
            self.objective[blk.b[k]] = self.objective.get(blk.b[k], 0.0) + dt * k
        return blk

    # -- decoding -----------------------------------------------------------------
    def arrival_step(self, vehicle, values) -> int:
        blk = self.block(vehicle)
        if len(blk.b) > 1:
            return int(np.argmax([values[i] for i in blk.b[1:]])) + 1
        for k in range(1, self.K + 1):
            if values[blk.x[k]] >= blk.x_f - 1e-6 and abs(values[blk.v[k]] - blk.params.vf) <= 1e-6:
                return k
        return self.K

    def decode(self, values) -> dict[int, Trajectory]:
        """Trajectories up to arrival, re-integrated from the solved velocities."""
        out = {}
        for vid, blk in self.vehicles.items():
            n = self.arrival_step(vid, values)
            v = [blk.params.v0] + [values[blk.v[k]] for k in range(1, n + 1)]
            v = np.clip(np.asarray(v, dtype=float), 0.0, blk.params.v_max)
            v[-1] = blk.params.vf if abs(v[-1] - blk.params.vf) < 1e-6 else v[-1]
            out[vid] = from_velocities(blk.x0, v, self.dt, vid, n)
        return out

    def time_objective(self, values) -> float:
        return sum(self.arrival_step(vid, values) * self.dt for vid in self.vehicles)


# -- builders -------------------------------------------------------------------

def horizon_for(x_f: float, params: VehicleParams, dt: float) -> int:
    """Default horizon: three times the continuous minimum time."""
    T = min_time_tpbvp(x_f, params.v0, params.vf, params).T
    return max(math.ceil(3 * T / dt - 1e-9), math.ceil(T / dt - 1e-9) + 2, 2)


def build_single(x_f: float, params: VehicleParams, dt: float, K: int | None = None,
                 vehicle: int = 0, goal_cuts: bool = False) -> MilpModel:
    if K is None:
        K = horizon_for(x_f, params, dt)
    model = MilpModel(dt, K, goal_cuts=goal_cuts)
    model.add_vehicle(vehicle, x_f, params)
    return model


def build_fleet(vehicles, dt: float, K: int, goal_cuts: bool = True) -> MilpModel:
    """``vehicles``: iterable of (vehicle_id, x_f, params)."""
    model = MilpModel(dt, K, goal_cuts=goal_cuts)
    for vid, x_f, params in vehicles:
        model.add_vehicle(vid, x_f, params)
    return model


def add_avoidance(model: MilpModel, crossing, steps, link: bool = True) -> int:
    """Add the avoidance disjunction at each step; returns the number of new steps.

    ``crossing`` needs ``vehicles``, ``interval_i``, ``interval_j`` and an
    ``intersection`` or ``vertex`` attribute. With ``link`` the selectors of adjacent
    constrained steps are chained monotonically: positions never decrease, so "before"
    at k implies "before" at k-1 and "after" at k implies "after" at k+1. This cuts
    symmetric branches without removing any feasible trajectory.
    """
    i, j = crossing.vehicles
    bi, bj = model.block(i), model.block(j)
    vertex = getattr(crossing, "intersection", None) or getattr(crossing, "vertex")
    key = ((i, j), vertex)
    done = model.avoidance.setdefault(key, {})
    (xis, xie), (xjs, xje) = crossing.interval_i, crossing.interval_j
    mi = max(bi.x_f + (xie - xis), bi.x_ub - xis, xie - bi.x0)
    mj = max(bj.x_f + (xje - xjs), bj.x_ub - xjs, xje - bj.x0)
    new = []
    for k in sorted(set(int(s) for s in steps)):
        if k in done:
            continue
        if not 1 <= k <= model.K:
            raise ModelError(f"step {k} outside 1..{model.K}")
        tag = f"c_{i}_{j}_{_safe(vertex)}_{k}"
        c = [model.add_var(f"{tag}_{l}", 0, 1, binary=True) for l in range(1, 5)]
        model.add_row([model.term(i, "x", k), (c[0], -mi)], LE, xis, "avoid")
        model.add_row([model.term(i, "x", k - 1), (c[1], mi)], GE, xie, "avoid")
        model.add_row([model.term(j, "x", k), (c[2], -mj)], LE, xjs, "avoid")
        model.add_row([model.term(j, "x", k - 1), (c[3], mj)], GE, xje, "avoid")
        model.add_row([(ci, 1.0) for ci in c], LE, 3.0, "avoid")
        done[k] = c
        new.append(k)
    if link:
        fresh = set(new)
        for k in new:
            if k - 1 in done:
                _link(model, done[k - 1], done[k])
            if k + 1 in done and k + 1 not in fresh:
                _link(model, done[k], done[k + 1])
    return len(new)


def _link(model: MilpModel, prev, cur) -> None:
    for l in (0, 2):   # before-selectors: c_{k-1} <= c_k
        model.add_row([(prev[l], 1.0), (cur[l], -1.0)], LE, 0.0, "link")
    for l in (1, 3):   # after-selectors: c_k <= c_{k-1}
        model.add_row([(cur[l], 1.0), (prev[l], -1.0)], LE, 0.0, "link")


def apply_goal_window(model: MilpModel, window: GoalWindow) -> MilpModel:
    blk = model.block(window.vehicle)
    if window.lb_step > model.K:
        raise EmptyWindow(f"vehicle {window.vehicle}: window starts after K={model.K}")
    blk.window = window
    if len(blk.b) <= 1:
        return model
    for k in range(1, model.K + 1):
        if k < window.lb_step or k > window.ub_step:
            model.ub[blk.b[k]] = 0.0
    if all(model.ub[i] == 0 for i in blk.b[1:]):
        raise EmptyWindow(f"vehicle {window.vehicle}: every goal binary fixed to 0")
    return model


def add_waypoint(model: MilpModel, vehicle, k: int, x_limit: float, sense: str = LE) -> Row:
    blk = model.block(vehicle)
    if not 1 <= k <= model.K:
        raise ModelError(f"step {k} outside 1..{model.K}")
    if sense not in (LE, EQ):
        raise ModelError(f"waypoint sense must be <= or =, got {sense!r}")
    return model.add_row([(blk.x[k], 1.0)], sense, x_limit, "waypoint")


def add_progress_tiebreak(model: MilpModel, share: float = 0.5) -> MilpModel:
    """Prefer, among equal-time solutions, the one furthest along at every step.

    The weight keeps the whole term below ``share`` of one step, so it never trades
    away arrival time.
    """
    scale = sum(model.K * max(blk.x_f - blk.x0, 1e-9) for blk in model.vehicles.values())
    w = share * model.dt / scale
    model.tiebreak_weight = w
    for blk in model.vehicles.values():
        for k in range(1, model.K + 1):
            model.objective[blk.x[k]] = model.objective.get(blk.x[k], 0.0) - w
            model.obj_constant += w * blk.x_f
    return model


def build_distance_objective(model: MilpModel, windows: dict | None = None) -> MilpModel:
    """Swap the arrival-time objective for summed distance-to-goal (in place).

    Goal binaries and their rows are dropped. Each vehicle must be at its goal by
    step K, or by its window's upper step when windows are given; the penalty then
    only covers steps inside the window.
    """
    for blk in model.vehicles.values():
        if blk.params.vf != 0:
            raise NonzeroFinalVelocity(f"vehicle {blk.vehicle} has vf = {blk.params.vf}")
    drop = set(model.goal_binaries())
    for blk in model.vehicles.values():
        drop.update(i for i in blk.arrived if i is not None)
    model.rows = [r for r in model.rows if r.tag not in ("goal", "goal_cut")]
    model.objective = {}
    model.obj_constant = 0.0
    model.tiebreak_weight = 0.0
    _drop_vars(model, drop)
    for vid, blk in model.vehicles.items():
        blk.b = [None]
        blk.arrived = [None]
        w = (windows or {}).get(vid) or blk.window
        lo, hi = (w.lb_step, min(w.ub_step, model.K)) if w else (1, model.K)
        for k in range(lo, hi + 1):
            model.objective[blk.x[k]] = model.objective.get(blk.x[k], 0.0) - 1.0
            model.obj_constant += blk.x_f
        model.add_row([(blk.x[hi], 1.0)], GE, blk.x_f, "arrive")
    model.objective_kind = "distance"
    return model


def _drop_vars(model: MilpModel, drop: set) -> None:
    keep = [i for i in range(model.n_vars) if i not in drop]
    remap = {old: new for new, old in enumerate(keep)}
    model.names = [model.names[i] for i in keep]
    model.lb = [model.lb[i] for i in keep]
    model.ub = [model.ub[i] for i in keep]
    model.binary = [model.binary[i] for i in keep]
    for row in model.rows:
        row.coefs = {remap[i]: c for i, c in row.coefs.items()}
    model.objective = {remap[i]: c for i, c in model.objective.items() if i in remap}
    for blk in model.vehicles.values():
        for name in ("x", "v", "u", "b"):
            setattr(blk, name, [None if i is None else remap.get(i) for i in getattr(blk, name)])
    for steps in model.avoidance.values():
        for k, c in steps.items():
            steps[k] = [remap[i] for i in c]


def _safe(name) -> str:
    return re.sub(r"[^A-Za-z0-9]", "_", str(name))


# -- LP-format export ---------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def export_lp(model: MilpModel) -> str:
    """CPLEX-LP style text: objective, rows, bounds, binaries.

    The objective constant is carried in a ``\\ constant`` comment line.
    """
    names = model.names

    def expr(coefs):
        parts = []
        for idx in sorted(coefs):
            c = coefs[idx]
            parts.append(f"{'-' if c < 0 else '+'} {_fmt(abs(c))} {names[idx]}")
        return " ".join(parts) if parts else "0"

    out = ["\\ fleetplan MILP export", f"\\ constant {_fmt(model.obj_constant)}", "Minimize", f" obj: {expr(model.objective)}", "Subject To"]
    for n, row in enumerate(model.rows):
        out.append(f" r{n}: {expr(row.coefs)} {row.sense} {_fmt(row.rhs)}")
    out.append("Bounds")
    for i, name in enumerate(names):
        lo, hi = model.lb[i], model.ub[i]
        lo_s = "-inf" if math.isinf(lo) else _fmt(lo)
        hi_s = "+inf" if math.isinf(hi) else _fmt(hi)
        out.append(f" {lo_s} <= {name} <= {hi_s}")
    out.append("Binaries")
    out += [f" {names[i]}" for i in model.binaries()]
    out.append("End")
    return "\n".join(out) + "\n"


_TERM = re.compile(r"([+-])\s*(\S+)\s+(\S+)")


def read_lp(text: str) -> MilpModel:
    """Read back the subset written by :func:`export_lp` (no vehicle metadata)."""
    model = MilpModel(dt=1.0, K=0)
    section = None
    index: dict[str, int] = {}
    pending_rows = []
    obj_line = ""
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\ constant"):
            model.obj_constant = float(line.split()[2])
            continue
        if not line or line.startswith("\\"):
            continue
        if line in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
            section = line
            continue
        if section == "Minimize":
            obj_line = line.split(":", 1)[1]
        elif section == "Subject To":
            body = line.split(":", 1)[1].strip()
            m = re.match(r"(.*)\s(<=|>=|=)\s(\S+)$", body)
            pending_rows.append((m.group(1), m.group(2), float(m.group(3))))
        elif section == "Bounds":
            lo, _, name, _, hi = line.split()
            index[name] = model.add_var(name, float(lo), float(hi))
        elif section == "Binaries":
            model.binary[index[line]] = True

    def parse(expr):
        return {index[name]: (1 if sign == "+" else -1) * float(c) for sign, c, name in _TERM.findall(expr)}

    model.objective = parse(obj_line)
    for expr, sense, rhs in pending_rows:
        model.rows.append(Row(parse(expr), sense, rhs))
    return model
