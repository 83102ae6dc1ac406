"""TOML configuration for the planner and benchmark harness."""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli

from .milp.solver import BACKENDS
from .planners.base import PlannerConfig
from .road_network import VehicleParams

PLANNER_NAMES = ("full", "interval", "midpoint", "heuristic", "reactive")
SCENARIO_RE = re.compile(r"^(grid(?P<n>\d+)|toy(?P<variant>[12])(?:_m(?P<m>\d+))?|mine(?P<seed>\d+)?)$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = f"{source or '<config>'}:{line}: " if line else (f"{source}: " if source else "")
        super().__init__(where + message)


@dataclass
class BenchConfig:
    scenarios: list = field(default_factory=lambda: ["grid1", "grid2", "grid3"])
    planners: list = field(default_factory=lambda: list(PLANNER_NAMES))
    repetitions: int = 1
    dt: float = 1.0
    seed: int = 2024
    output: str = "results"
    mine_vertices: int = 120
    mine_vehicles: int = 24
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    intersection_half_width: float = 5.0
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    mode: str = "interval"       # used when the planner list says "milp"


def _line_of(text: str, dotted: str) -> int | None:
    """Best-effort line number of a key, for diagnostics."""
    parts = dotted.split(".")
    section, key = (".".join(parts[:-1]), parts[-1])
    current = ""
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            current = m.group(1).strip()
            continue
        m = re.match(r"^([A-Za-z0-9_.\"-]+)\s*=", line)
        if not m:
            continue
        k = m.group(1).strip('"')
        full = f"{current}.{k}" if current else k
        if full == dotted or (current == section and k == key):
            return no
    return None


_KNOWN = {
    "planner", "planners", "scenarios", "repetitions", "dt", "seed", "output", "mode",
    "v_max", "a_max", "a_min", "length", "buffer", "resistance_model",
    "solver.backend", "solver.time_limit", "reactive.buffer",
    "mine.vertices", "mine.vehicles",
    "milp.goal_window", "milp.max_iterations", "milp.equality_waypoints", "milp.progress_tiebreak",
}


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_config(text: str, source: str | None = None) -> BenchConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", int(m.group(1)) if m else None, source) from None
    flat = _flatten(raw)

    def fail(key, msg):
        raise ConfigError(msg, _line_of(text, key), source)

    for key in flat:
        if key not in _KNOWN:
            fail(key, f"unknown key {key!r}")

    def number(key, default, lo=None, integer=False, strict=False):
        if key not in flat:
            return default
        val = flat[key]
        ok = isinstance(val, int) if integer else isinstance(val, (int, float))
        if isinstance(val, bool) or not ok:
            fail(key, f"{key} must be {'an integer' if integer else 'a number'}, got {val!r}")
        if lo is not None and (val <= lo if strict else val < lo):
            fail(key, f"{key} must be {'>' if strict else '>='} {lo}, got {val!r}")
        return val

    def boolean(key, default):
        if key not in flat:
            return default
        val = flat[key]
        if isinstance(val, str) and val.lower() in ("on", "off"):
            return val.lower() == "on"
        if not isinstance(val, bool):
            fail(key, f"{key} must be true/false or on/off, got {val!r}")
        return val

    cfg = BenchConfig()
    planners = flat.get("planners", [flat["planner"]] if "planner" in flat else cfg.planners)
    if isinstance(planners, str):
        planners = [planners]
    if not isinstance(planners, list) or not planners:
        fail("planners" if "planners" in flat else "planner", "planner list is empty")
    mode = flat.get("mode", cfg.mode)
    if mode not in ("interval", "midpoint"):
        fail("mode", f"mode must be 'interval' or 'midpoint', got {mode!r}")
    resolved = []
    for p in planners:
        p = mode if p == "milp" else p
        if p not in PLANNER_NAMES:
            fail("planners" if "planners" in flat else "planner", f"unknown planner {p!r}")
        resolved.append(p)

    scenarios = flat.get("scenarios", cfg.scenarios)
    if isinstance(scenarios, str):
        scenarios = [scenarios]
    if not isinstance(scenarios, list) or not scenarios:
        fail("scenarios", "scenario list is empty")
    for s in scenarios:
        if not isinstance(s, str) or not SCENARIO_RE.match(s):
            fail("scenarios", f"unknown scenario {s!r} (grid<n>, toy1, toy2, toy<v>_m<m>, mine[<seed>])")

    backend = flat.get("solver.backend", "highs")
    if backend not in BACKENDS:
        fail("solver.backend", f"unknown solver backend {backend!r}")

    base = VehicleParams()
    vehicle = replace(
        base,
        v_max=number("v_max", base.v_max, 0, strict=True),
        a_max=number("a_max", base.a_max, 0, strict=True),
        a_min=-abs(number("a_min", base.a_min)),
        length=number("length", base.length, 0, strict=True),
        resistance_model=boolean("resistance_model", base.resistance_model),
    )
    if vehicle.a_min == 0:
        fail("a_min", "a_min must be nonzero")
    planner = PlannerConfig(
        backend=backend,
        buffer=number("reactive.buffer", 10.0, 0),
        max_iterations=number("milp.max_iterations", 50, 1, integer=True),
        goal_window=boolean("milp.goal_window", True),
        equality_waypoints=boolean("milp.equality_waypoints", False),
        progress_tiebreak=boolean("milp.progress_tiebreak", False),
        time_limit=number("solver.time_limit", None, 0, strict=True),
    )
    seed = number("seed", cfg.seed, integer=True)
    env_seed = os.environ.get("FLEET_SEED")
    if env_seed:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"FLEET_SEED must be an integer, got {env_seed!r}", None, source) from None
    output = flat.get("output", cfg.output)
    if not isinstance(output, str) or not output:
        fail("output", "output must be a directory name")
    return BenchConfig(
        scenarios=list(scenarios), planners=resolved,
        repetitions=number("repetitions", 1, 1, integer=True),
        dt=number("dt", 1.0, 0, strict=True), seed=seed, output=output,
        mine_vertices=number("mine.vertices", cfg.mine_vertices, 10, integer=True),
        mine_vehicles=number("mine.vehicles", cfg.mine_vehicles, 1, integer=True),
        vehicle=vehicle, intersection_half_width=number("buffer", 5.0, 0, strict=True),
        planner=planner, mode=mode,
    )


def load_config(path) -> BenchConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path))
