from .base import NonTermination, PlannerConfig, PlannerError, PlanResult, validate_result
from .heuristic import plan_heuristic
from .milp import INTERVAL, MIDPOINT, plan_full_range, plan_iterative
from .reactive import CannotStop, plan_reactive

__all__ = ["INTERVAL", "MIDPOINT", "PLANNERS", "CannotStop", "NonTermination", "PlannerConfig", "PlannerError",
           "PlanResult", "plan_full_range", "plan_heuristic", "plan_iterative", "plan_reactive", "run_planner",
           "validate_result"]

PLANNERS = {
    "full": plan_full_range,
    "interval": lambda sc, cfg=None: plan_iterative(sc, INTERVAL, cfg),
    "midpoint": lambda sc, cfg=None: plan_iterative(sc, MIDPOINT, cfg),
    "heuristic": plan_heuristic,
    "reactive": plan_reactive,
}


def run_planner(name: str, scenario, config: PlannerConfig | None = None) -> PlanResult:
    try:
        fn = PLANNERS[name]
    except KeyError:
        raise ValueError(f"unknown planner {name!r}; choose from {', '.join(PLANNERS)}") from None
    return fn(scenario, config)
