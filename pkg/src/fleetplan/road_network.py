"""Road graph, shortest paths and intersection occupancy geometry."""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

log = logging.getLogger(__name__)

VertexId = str
VehicleId = int


class NoPath(ValueError):
    pass


class UnknownVertex(KeyError):
    pass


class NetworkFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RoadNetwork:
    vertices: frozenset
    edges: tuple  # of (u, v, length)
    intersection_half_width: float = 5.0
    _adj: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj: dict[VertexId, dict[VertexId, float]] = {v: {} for v in self.vertices}
        for u, v, length in self.edges:
            if u == v:
                raise ValueError(f"self-loop edge at {u!r}")
            if not length > 0:
                raise ValueError(f"edge {u}-{v} has non-positive length {length}")
            if u not in adj or v not in adj:
                raise UnknownVertex(f"unknown vertex {u if u not in adj else v!r}")
            # parallel edges collapse to the shortest one
            if v in adj[u] and adj[u][v] <= length:
                continue
            adj[u][v] = float(length)
            adj[v][u] = float(length)
        if self.intersection_half_width < 0:
            raise ValueError("intersection_half_width must be >= 0")
        object.__setattr__(self, "_adj", adj)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], r: float = 5.0, vertices=()) -> "RoadNetwork":
        edges = tuple((str(u), str(v), float(w)) for u, v, w in edges)
        vs = {str(v) for v in vertices}
        for u, v, _ in edges:
            vs.update((u, v))
        return cls(frozenset(vs), edges, float(r))

    def neighbors(self, v: VertexId) -> dict[VertexId, float]:
        try:
            return self._adj[v]
        except KeyError:
            raise UnknownVertex(f"unknown vertex {v!r}") from None

    def edge_length(self, u: VertexId, v: VertexId) -> float:
        return self.neighbors(u)[v]

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        start = min(self.vertices)
        seen = {start}
        stack = [start]
        while stack:
            for w in self._adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def degree(self, v: VertexId) -> int:
        return len(self.neighbors(v))


@dataclass(frozen=True)
class PathPlan:
    vehicle: VehicleId
    vertices: tuple
    cumulative_distance: tuple

    @property
    def total_length(self) -> float:
        return self.cumulative_distance[-1]

    def edges(self) -> list[frozenset]:
        return [frozenset(e) for e in zip(self.vertices, self.vertices[1:])]

    @classmethod
    def along(cls, net: RoadNetwork, vehicle: VehicleId, vertices: Iterable[VertexId]) -> "PathPlan":
        vertices = tuple(str(v) for v in vertices)
        cum = [0.0]
        for u, v in zip(vertices, vertices[1:]):
            nb = net.neighbors(u)
            if v not in nb:
                raise ValueError(f"{u}-{v} is not an edge of the network")
            cum.append(cum[-1] + nb[v])
        return cls(vehicle, vertices, tuple(cum))


@dataclass(frozen=True)
class VehicleParams:
    length: float = 15.0
    v_max: float = 10.0
    a_max: float = 3.0
    a_min: float = -3.0
    v0: float = 0.0
    vf: float = 0.0
    mass: float = 200.0
    rolling_resistance: float = 0.08
    resistance_model: bool = False

    def __post_init__(self):
        if not self.a_min < 0 < self.a_max:
            raise ValueError("need a_min < 0 < a_max")
        if not (0 <= self.v0 <= self.v_max and 0 <= self.vf <= self.v_max):
            raise ValueError("boundary velocities must lie in [0, v_max]")

    @property
    def accel(self) -> float:
        """Usable acceleration, reduced by rolling resistance when enabled."""
        if self.resistance_model:
            return self.a_max - self.rolling_resistance * 9.81
        return self.a_max

    @property
    def decel(self) -> float:
        """Usable (negative) braking acceleration."""
        if self.resistance_model:
            return self.a_min - self.rolling_resistance * 9.81
        return self.a_min


def shortest_path(net: RoadNetwork, start: VertexId, goal: VertexId, vehicle: VehicleId = 0) -> PathPlan:
    """Dijkstra; equal-length paths are ordered by their vertex sequence."""
    start, goal = str(start), str(goal)
    for v in (start, goal):
        if v not in net.vertices:
            raise UnknownVertex(f"unknown vertex {v!r}")
    best: dict[VertexId, tuple[float, tuple]] = {start: (0.0, (start,))}
    heap = [(0.0, (start,))]
    done = set()
    while heap:
        d, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done.add(u)
        if u == goal:
            return PathPlan.along(net, vehicle, path)
        for w, length in net.neighbors(u).items():
            if w in done:
                continue
            cand = (d + length, path + (w,))
            if w not in best or cand < best[w]:
                best[w] = cand
                heapq.heappush(heap, cand)
    raise NoPath(f"{goal!r} unreachable from {start!r}")


@dataclass(frozen=True)
class Crossing:
    """Two paths crossing at an interior vertex, with occupancy intervals on each path."""

    vehicles: tuple  # (i, j)
    vertex: VertexId
    interval_i: tuple  # (x_is, x_ie)
    interval_j: tuple

    def swapped(self) -> "Crossing":
        return Crossing(self.vehicles[::-1], self.vertex, self.interval_j, self.interval_i)


@dataclass(frozen=True)
class SharedEdge:
    vehicles: tuple
    edge: frozenset


def occupancy_interval(path: PathPlan, index: int, r: float, length: float) -> tuple[float, float]:
    d = path.cumulative_distance[index]
    return (d - r, d + r + length)


def crossing_intervals(p1: PathPlan, p2: PathPlan, params1: VehicleParams, params2: VehicleParams,
                       net: RoadNetwork) -> list[Crossing]:
    r = net.intersection_half_width
    pos2 = {v: n for n, v in enumerate(p2.vertices)}
    out = []
    for n1, v in enumerate(p1.vertices):
        if n1 == 0 or n1 == len(p1.vertices) - 1:
            continue
        n2 = pos2.get(v)
        if n2 is None or n2 == 0 or n2 == len(p2.vertices) - 1:
            continue
        e1 = {frozenset((p1.vertices[n1 - 1], v)), frozenset((v, p1.vertices[n1 + 1]))}
        e2 = {frozenset((p2.vertices[n2 - 1], v)), frozenset((v, p2.vertices[n2 + 1]))}
        if e1 & e2:
            # merge/diverge onto a common road: a shared-edge interaction, not a crossing
            continue
        out.append(Crossing(
            (p1.vehicle, p2.vehicle), v,
            occupancy_interval(p1, n1, r, params1.length),
            occupancy_interval(p2, n2, r, params2.length),
        ))
    shared = shared_edges(p1, p2)
    if shared:
        log.debug("vehicles %s/%s share %d edge(s); ignored", p1.vehicle, p2.vehicle, len(shared))
    return out


def shared_edges(p1: PathPlan, p2: PathPlan) -> list[SharedEdge]:
    e2 = set(p2.edges())
    return [SharedEdge((p1.vehicle, p2.vehicle), e) for e in p1.edges() if e in e2]


# -- text format ---------------------------------------------------------------

def parse_network(text: str) -> tuple[RoadNetwork, list[tuple[str, ...]]]:
    """Parse the line format. Returns the network and any unrecognised lines (tokenised)."""
    vertices, edges, extra = set(), [], []
    r = 5.0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "v" and len(tok) == 2:
                vertices.add(tok[1])
            elif tok[0] == "e" and len(tok) == 4:
                edges.append((tok[1], tok[2], float(tok[3])))
            elif tok[0] == "r" and len(tok) == 2:
                r = float(tok[1])
            else:
                extra.append(tuple(tok) + (lineno,))
        except ValueError as exc:
            raise NetworkFormatError(f"line {lineno}: {exc}") from None
    try:
        net = RoadNetwork.from_edges(edges, r, vertices)
    except (ValueError, KeyError) as exc:
        raise NetworkFormatError(str(exc)) from None
    return net, extra


def format_network(net: RoadNetwork) -> str:
    lines = [f"r {net.intersection_half_width:g}"]
    lines += [f"v {v}" for v in sorted(net.vertices)]
    lines += [f"e {u} {v} {w:.17g}" for u, v, w in net.edges]
    return "\n".join(lines) + "\n"


def load_network(path) -> RoadNetwork:
    net, extra = parse_network(Path(path).read_text())
    if extra:
        raise NetworkFormatError(f"line {extra[0][-1]}: unrecognised {' '.join(extra[0][:-1])!r}")
    return net
