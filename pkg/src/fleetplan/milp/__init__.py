from .model import (EQ, GE, LE, EmptyWindow, GoalWindow, HorizonTooShort, MilpModel, ModelError,
                    NonzeroFinalVelocity, UnknownVehicle, add_avoidance, add_progress_tiebreak,
                    add_waypoint, apply_goal_window, build_distance_objective, build_fleet, build_single,
                    export_lp, horizon_for, read_lp)
from .solver import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, BuiltinBackend, HighsBackend, SolveResult,
                     get_backend, solve, solve_lp, solve_milp)

__all__ = ["EQ", "GE", "LE", "EmptyWindow", "GoalWindow", "HorizonTooShort", "MilpModel", "ModelError",
           "NonzeroFinalVelocity", "UnknownVehicle", "add_avoidance", "add_progress_tiebreak", "add_waypoint",
           "apply_goal_window", "build_distance_objective", "build_fleet", "build_single", "export_lp",
           "horizon_for", "read_lp", "INFEASIBLE", "ITERATION_LIMIT", "OPTIMAL", "BuiltinBackend",
           "HighsBackend", "SolveResult", "get_backend", "solve", "solve_lp", "solve_milp"]
