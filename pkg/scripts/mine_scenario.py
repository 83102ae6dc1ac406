"""All planners on one random mine-like network: delay, compute time and interactions."""
import argparse

from fleetplan.interaction import active_only, detect_active
from fleetplan.planners import PLANNERS, PlannerConfig, run_planner
from fleetplan.planners.base import relaxed_solutions
from fleetplan.scenarios import make_random_mine, save_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--vertices", type=int, default=120)
    ap.add_argument("--vehicles", type=int, default=24)
    ap.add_argument("--save", help="write the scenario file here")
    args = ap.parse_args()
    sc = make_random_mine(args.seed, args.vertices, args.vehicles)
    if args.save:
        save_scenario(sc, args.save)
    relaxed = relaxed_solutions(sc, PlannerConfig())
    active = active_only(detect_active(relaxed, sc.geometry))
    print(f"{sc.label}: {len(sc.network.vertices)} vertices, {len(sc.network.edges)} edges, "
          f"{len(sc.fleet)} vehicles, {len(sc.geometry)} crossings, {len(active)} active when relaxed")
    print(f"{'planner':<10}{'delay s':>9}{'time s':>9}{'solves':>8}")
    for p in PLANNERS:
        res = run_planner(p, sc)
        print(f"{p:<10}{res.total_delay:>9.1f}{res.wall_time:>9.3f}{res.solves:>8}")


if __name__ == "__main__":
    main()
