"""Delays of every planner on the toy families, plus SVG plots of vehicle 1."""
import argparse
from pathlib import Path

from fleetplan.planners import PLANNERS, run_planner
from fleetplan.plot import plot_trajectory
from fleetplan.scenarios import make_toy_case


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--crossers", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--out", default="toy_plots")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(f"{'case':<10}" + "".join(f"{p:>11}" for p in PLANNERS))
    for variant in (1, 2):
        for m in args.crossers:
            if variant == 2 and m < 2:
                continue
            sc = make_toy_case(variant, m)
            row = []
            for p in PLANNERS:
                res = run_planner(p, sc)
                row.append(res.total_delay)
                svg = plot_trajectory(sc, res.trajectories, 1, title=f"{sc.label} {p}: vehicle 1")
                (out / f"{sc.label}_{p}.svg").write_text(svg)
            print(f"{sc.label:<10}" + "".join(f"{d:>11.1f}" for d in row))
    print(f"plots in {out}/")


if __name__ == "__main__":
    main()
