"""JSON result files: the scenario text, the trajectories and a summary."""
from __future__ import annotations

import json
from pathlib import Path

from .kinematics import Trajectory
from .planners.base import PlanResult
from .scenarios import Scenario, format_scenario, parse_scenario

FORMAT = "fleetplan-result/1"


class ResultFormatError(ValueError):
    pass


def result_to_dict(scenario: Scenario, result: PlanResult) -> dict:
    return {
        "format": FORMAT,
        "planner": result.planner,
        "dt": result.dt,
        "scenario": format_scenario(scenario),
        "label": scenario.label,
        "summary": {
            "total_delay_s": result.total_delay,
            "objective_s": result.objective,
            "iterations": result.iterations,
            "resolutions": result.resolutions,
            "constraint_steps": result.constraint_steps_added,
            "wall_time_s": result.wall_time,
        },
        "vehicles": {
            str(vid): {
                "arrival_step": t.arrival_step,
                "relaxed_step": result.relaxed_steps[vid],
                "x": t.x.tolist(), "v": t.v.tolist(), "u": t.u.tolist(),
            }
            for vid, t in sorted(result.trajectories.items())
        },
    }


def save_result(path, scenario: Scenario, result: PlanResult) -> Path:
    path = Path(path)
    path.write_text(json.dumps(result_to_dict(scenario, result), indent=1) + "\n")
    return path


def load_result(path) -> tuple[Scenario, PlanResult]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ResultFormatError(f"{path}: {exc}") from None
    if not isinstance(data, dict) or data.get("format") != FORMAT:
        raise ResultFormatError(f"{path}: not a {FORMAT} file")
    scenario = parse_scenario(data["scenario"], data.get("label", ""))
    dt = float(data["dt"])
    traj, relaxed = {}, {}
    for key, rec in data["vehicles"].items():
        vid = int(key)
        traj[vid] = Trajectory(vid, dt, rec["x"], rec["v"], rec["u"], rec["arrival_step"])
        relaxed[vid] = rec["relaxed_step"]
    s = data.get("summary", {})
    res = PlanResult(data["planner"], traj, relaxed, dt, iterations=s.get("iterations", 0),
                     constraint_steps_added=s.get("constraint_steps", 0), resolutions=s.get("resolutions", 0),
                     wall_time=s.get("wall_time_s", 0.0))
    return scenario.with_dt(dt), res
