"""Computation-time table on n x n grids: median wall time per planner."""
import argparse
import statistics

from fleetplan.planners import PLANNERS, run_planner
from fleetplan.scenarios import make_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-n", type=int, default=4)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--planners", nargs="+", default=list(PLANNERS), choices=list(PLANNERS))
    args = ap.parse_args()
    print(f"{'grid':<6}" + "".join(f"{p + ' s':>13}" for p in args.planners) + "   delays")
    for n in range(1, args.max_n + 1):
        sc = make_grid(n)
        times, delays = [], []
        for p in args.planners:
            runs = [run_planner(p, sc) for _ in range(args.reps)]
            times.append(statistics.median(r.wall_time for r in runs))
            delays.append(runs[0].total_delay)
        print(f"{n}x{n:<4}" + "".join(f"{t:>13.3f}" for t in times) + "   " + " ".join(f"{d:g}" for d in delays))


if __name__ == "__main__":
    main()
