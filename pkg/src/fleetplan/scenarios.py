"""Scenario generators: toy cases, N x N grids and random mine-like networks."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .interaction import active_only, detect_active
from .kinematics import TpbvpProfile, discrete_min_time, min_time_tpbvp
from .road_network import (Crossing, NetworkFormatError, PathPlan, RoadNetwork, VehicleParams,
                           crossing_intervals, format_network, parse_network, shortest_path)


@dataclass(frozen=True)
class Vehicle:
    id: int
    path: PathPlan
    params: VehicleParams

    @property
    def x_f(self) -> float:
        return self.path.total_length


@dataclass
class Scenario:
    network: RoadNetwork
    fleet: list
    dt: float = 1.0
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [v.id for v in self.fleet]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate vehicle ids")

    def vehicle(self, vid) -> Vehicle:
        for v in self.fleet:
            if v.id == vid:
                return v
        raise KeyError(vid)

    @property
    def ids(self) -> list[int]:
        return [v.id for v in self.fleet]

    @cached_property
    def geometry(self) -> list[Crossing]:
        out = []
        for a in range(len(self.fleet)):
            for b in range(a + 1, len(self.fleet)):
                va, vb = self.fleet[a], self.fleet[b]
                if va.id > vb.id:
                    va, vb = vb, va
                out += crossing_intervals(va.path, vb.path, va.params, vb.params, self.network)
        return out

    def with_dt(self, dt: float) -> "Scenario":
        return Scenario(self.network, list(self.fleet), dt, self.label, dict(self.meta))


# -- file format ------------------------------------------------------------------

PARAM_FIELDS = {"length", "v_max", "a_max", "a_min", "v0", "vf", "mass", "rolling_resistance"}
BOOL_FIELDS = {"resistance_model"}


def _param_lines(prefix: str, p: VehicleParams, base: VehicleParams | None = None) -> list[str]:
    out = []
    for name in sorted(PARAM_FIELDS | BOOL_FIELDS):
        val = getattr(p, name)
        if base is not None and val == getattr(base, name):
            continue
        out.append(f"{prefix} {name} {int(val) if name in BOOL_FIELDS else format(val, '.17g')}")
    return out


def format_scenario(s: Scenario) -> str:
    """Text form; vehicles whose parameters differ from the first get ``vparam`` lines."""
    lines = [f"# scenario {s.label}".rstrip(), f"dt {s.dt:g}"]
    base = s.fleet[0].params if s.fleet else VehicleParams()
    lines += _param_lines("param", base)
    lines.append(format_network(s.network).rstrip())
    for v in s.fleet:
        lines.append(f"task {v.id} {v.path.vertices[0]} {v.path.vertices[-1]} " + " ".join(v.path.vertices))
        lines += _param_lines(f"vparam {v.id}", v.params, base)
    return "\n".join(lines) + "\n"


def _param_value(name: str, text: str):
    if name in BOOL_FIELDS:
        if text not in ("0", "1"):
            raise ValueError(f"{name} must be 0 or 1")
        return text == "1"
    return float(text)


def parse_scenario(text: str, label: str = "") -> Scenario:
    """Network lines plus ``dt``, ``param <name> <value>``, ``task <id> <start> <goal> [vertices...]``
    and per-vehicle overrides ``vparam <id> <name> <value>``.

    A task without an explicit vertex list is routed with Dijkstra.
    """
    net, extra = parse_network(text)
    fields = PARAM_FIELDS | BOOL_FIELDS
    dt, params, tasks, overrides = 1.0, {}, [], {}
    for tok in extra:
        *tok, lineno = tok
        try:
            if tok[0] == "dt" and len(tok) == 2:
                dt = float(tok[1])
            elif tok[0] == "param" and len(tok) == 3 and tok[1] in fields:
                params[tok[1]] = _param_value(tok[1], tok[2])
            elif tok[0] == "vparam" and len(tok) == 4 and tok[2] in fields:
                overrides.setdefault(int(tok[1]), {})[tok[2]] = _param_value(tok[2], tok[3])
            elif tok[0] == "task" and len(tok) >= 4:
                tasks.append((int(tok[1]), tok[2], tok[3], tok[4:]))
            else:
                raise NetworkFormatError(f"line {lineno}: unrecognised {' '.join(tok)!r}")
        except ValueError as exc:
            raise NetworkFormatError(f"line {lineno}: {exc}") from None
    if not dt > 0:
        raise NetworkFormatError("dt must be positive")
    vp = VehicleParams(**params)
    unknown = set(overrides) - {t[0] for t in tasks}
    if unknown:
        raise NetworkFormatError(f"vparam for unknown vehicle(s) {sorted(unknown)}")
    fleet = []
    for vid, start, goal, via in tasks:
        try:
            path = PathPlan.along(net, vid, via) if via else shortest_path(net, start, goal, vid)
        except (ValueError, KeyError) as exc:
            raise NetworkFormatError(f"task {vid}: {exc}") from None
        if path.vertices[0] != start or path.vertices[-1] != goal:
            raise NetworkFormatError(f"task {vid}: vertex list does not join {start} to {goal}")
        fleet.append(Vehicle(vid, path, replace(vp, **overrides.get(vid, {}))))
    return Scenario(net, fleet, dt, label)


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), path.stem)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(format_scenario(s))


# -- grids --------------------------------------------------------------------------

def make_grid(n: int, dt: float = 1.0, params: VehicleParams | None = None, r: float = 5.0,
              spacing: float = 100.0) -> Scenario:
    """n horizontal and n vertical straight roads over an n x n lattice.

    Vehicles 1..n drive the rows west to east, n+1..2n the columns south to north.
    Every vehicle has a ``spacing`` approach and exit, so vehicle pairs on the
    diagonal reach their shared intersection at the same time.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    params = params or VehicleParams()
    edges = []
    for a in range(1, n + 1):
        row = [f"HS{a}"] + [f"I{a}_{c}" for c in range(1, n + 1)] + [f"HG{a}"]
        col = [f"VS{a}"] + [f"I{r_}_{a}" for r_ in range(1, n + 1)] + [f"VG{a}"]
        for seq in (row, col):
            edges += [(u, v, spacing) for u, v in zip(seq, seq[1:])]
    net = RoadNetwork.from_edges(edges, r)
    fleet = []
    for a in range(1, n + 1):
        row = [f"HS{a}"] + [f"I{a}_{c}" for c in range(1, n + 1)] + [f"HG{a}"]
        fleet.append(Vehicle(a, PathPlan.along(net, a, row), params))
    for a in range(1, n + 1):
        col = [f"VS{a}"] + [f"I{r_}_{a}" for r_ in range(1, n + 1)] + [f"VG{a}"]
        fleet.append(Vehicle(n + a, PathPlan.along(net, n + a, col), params))
    return Scenario(net, fleet, dt, f"grid{n}", {"kind": "grid", "n": n})


# -- toy cases ----------------------------------------------------------------------

def time_at(profile: TpbvpProfile, x: float) -> float:
    """Time at which a continuous profile first reaches position x."""
    lo, hi = 0.0, profile.T
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if profile.state(mid)[0] < x:
            lo = mid
        else:
            hi = mid
    return hi


def approach_for_entry(target_time: float, exit_length: float, params: VehicleParams, r: float) -> float:
    """Approach length whose relaxed profile reaches the intersection edge at target_time."""
    lo, hi = r + 1e-6, 10_000.0
    for _ in range(100):
        a = 0.5 * (lo + hi)
        prof = min_time_tpbvp(a + exit_length, params.v0, params.vf, params)
        if time_at(prof, a - r) < target_time:
            lo = a
        else:
            hi = a
    return 0.5 * (lo + hi)


# entry-time offsets (s) of each crossing vehicle relative to vehicle 1
TOY_OFFSETS = {
    1: lambda m: [0.5] * m,
    2: lambda m: ([-0.3, 4.0] + [5.0] * max(m - 2, 0))[:m],
}
# variant 2 slows the leading crosser so that vehicle 1's first wait is long
TOY_LEAD_VMAX = 5.0


class ToyCaseError(ValueError):
    """Generated toy geometry does not produce the intended relaxed interactions."""


def relaxed_pattern(scenario: Scenario) -> list[tuple]:
    """(pair, intersection, first vehicle) of each active interaction under relaxed motion."""
    traj = {}
    for v in scenario.fleet:
        p = v.params
        traj[v.id] = discrete_min_time(v.x_f, p.v0, p.vf, p, scenario.dt, v.id)
    out = []
    for n in active_only(detect_active(traj, scenario.geometry, 0.0)):
        (ti, _), (tj, _) = n.occupancy_i, n.occupancy_j
        i, j = n.vehicles
        first = j if tj < ti - 1e-9 or (abs(ti - tj) <= 1e-9 and j < i) else i
        out.append((n.vehicles, n.intersection, first))
    return out


def _check_toy(scenario: Scenario, variant: int, names: list) -> None:
    got = relaxed_pattern(scenario)
    if variant == 1:
        want = [((1, p + 2), name, 1) for p, name in enumerate(names)]
    else:
        want = [((1, 2), names[0], 2)]
    if sorted(got) != sorted(want):
        raise ToyCaseError(f"toy case {variant}: relaxed active interactions {got}, expected {want}")


def make_toy_case(variant: int, n_crossers: int = 3, dt: float = 1.0, params: VehicleParams | None = None,
                  r: float = 5.0, spacing: float = 100.0, offsets=None,
                  crosser_params=None, validate: bool | None = None) -> Scenario:
    """Vehicle 1 crosses ``n_crossers`` consecutive intersections, each crossed once by another vehicle.

    Crosser approach lengths are solved from the relaxed minimum-time timing so that
    each crosser reaches its intersection ``offsets[p]`` seconds after vehicle 1.
    Variant 1 puts every crosser just behind vehicle 1. Variant 2 lets a slower
    vehicle 2 lead at A while the later crossers trail vehicle 1 closely enough that
    delaying vehicle 1 at A pulls it into them.

    With the default offsets and parameters the result is checked against that
    pattern (``ToyCaseError`` otherwise); ``validate`` forces or skips the check.
    """
    if variant not in TOY_OFFSETS:
        raise ValueError("variant must be 1 or 2")
    if validate is None:
        validate = offsets is None and crosser_params is None
    params = params or VehicleParams()
    offsets = list(offsets if offsets is not None else TOY_OFFSETS[variant](n_crossers))
    if len(offsets) != n_crossers:
        raise ValueError("need one offset per crossing vehicle")
    if crosser_params is None:
        crosser_params = [params] * n_crossers
        if variant == 2:
            crosser_params[0] = replace(params, v_max=min(params.v_max, TOY_LEAD_VMAX))
    cparams = list(crosser_params)
    if len(cparams) != n_crossers:
        raise ValueError("need one parameter set per crossing vehicle")
    names = [chr(ord("A") + p) for p in range(n_crossers)]
    main = ["S1"] + names + ["G1"]
    edges = [(u, v, spacing) for u, v in zip(main, main[1:])]
    x1_f = spacing * (n_crossers + 1)
    prof1 = min_time_tpbvp(x1_f, params.v0, params.vf, params)
    approaches = []
    for p, name in enumerate(names):
        t1 = time_at(prof1, spacing * (p + 1) - r)
        a = approach_for_entry(t1 + offsets[p], spacing, cparams[p], r)
        approaches.append(a)
        q = p + 2
        edges += [(f"S{q}", name, round(a, 6)), (name, f"G{q}", spacing)]
    net = RoadNetwork.from_edges(edges, r)
    fleet = [Vehicle(1, PathPlan.along(net, 1, main), params)]
    for p, name in enumerate(names):
        q = p + 2
        fleet.append(Vehicle(q, PathPlan.along(net, q, [f"S{q}", name, f"G{q}"]), cparams[p]))
    sc = Scenario(net, fleet, dt, f"toy{variant}_m{n_crossers}",
                  {"kind": "toy", "variant": variant, "offsets": offsets, "approaches": approaches})
    if validate:
        _check_toy(sc, variant, names)
    return sc


# -- random mine-like networks ---------------------------------------------------------

def make_random_mine(seed: int, n_vertices: int = 120, n_vehicles: int = 24, dt: float = 1.0,
                     params: VehicleParams | None = None, r: float = 5.0, spacing: float = 120.0,
                     min_edge: float = 60.0, extra_edge_fraction: float = 0.15) -> Scenario:
    """Seeded sparse road network with long corridors and random tasks.

    Points are scattered with a minimum separation, joined by their Delaunay
    triangulation, thinned to a spanning tree plus a fraction of the remaining short
    edges, and edge lengths are the Euclidean distances. Tasks join random distinct
    degree-1 or degree-2 vertices (loading and dumping areas) by Dijkstra paths.
    """
    from scipy.spatial import Delaunay
    from scipy.sparse.csgraph import minimum_spanning_tree
    import scipy.sparse as sp

    if n_vertices < 10 or n_vehicles < 1:
        raise ValueError("need n_vertices >= 10 and n_vehicles >= 1")
    rng = random.Random(seed)
    side = spacing * math.sqrt(n_vertices)
    pts = []
    while len(pts) < n_vertices:
        p = (rng.uniform(0, side), rng.uniform(0, side))
        if all((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 >= min_edge ** 2 for q in pts):
            pts.append(p)
    P = np.array(pts)
    tri = Delaunay(P)
    cand = set()
    for simplex in tri.simplices:
        for a in range(3):
            u, v = sorted((int(simplex[a]), int(simplex[(a + 1) % 3])))
            cand.add((u, v))
    cand = sorted(cand)
    w = np.array([np.linalg.norm(P[u] - P[v]) for u, v in cand])
    G = sp.coo_matrix((w, ([u for u, _ in cand], [v for _, v in cand])), shape=(n_vertices, n_vertices))
    T = minimum_spanning_tree(G).tocoo()
    keep = {tuple(sorted((int(u), int(v)))) for u, v in zip(T.row, T.col)}
    rest = sorted((w[n], e) for n, e in enumerate(cand) if e not in keep)
    rest = [e for _, e in rest[: int(len(rest) * 0.5)]]
    rng.shuffle(rest)
    keep |= set(rest[: int(extra_edge_fraction * len(cand))])
    edges = [(f"n{u}", f"n{v}", round(float(np.linalg.norm(P[u] - P[v])), 3)) for u, v in sorted(keep)]
    net = RoadNetwork.from_edges(edges, r)
    params = params or VehicleParams()
    ends = sorted(v for v in net.vertices if net.degree(v) <= 2)
    if len(ends) < 2:
        ends = sorted(net.vertices)
    fleet = []
    for vid in range(1, n_vehicles + 1):
        s, g = rng.sample(ends, 2)
        fleet.append(Vehicle(vid, shortest_path(net, s, g, vid), params))
    return Scenario(net, fleet, dt, f"mine_s{seed}", {"kind": "mine", "seed": seed,
                                                       "coords": {f"n{i}": tuple(P[i]) for i in range(n_vertices)}})
