"""Exit gates: one PASS/FAIL line per acceptance criterion, printed in the terminal summary."""
import math
import random
import statistics
import time
from types import SimpleNamespace

import numpy as np

from corpus import MINE_SEEDS, named, order_oracle, plan, report, two_vehicle_corpus
from fleetplan.bench import compare_objectives, run_matrix, strip_time_columns
from fleetplan.config import BenchConfig
from fleetplan.interaction import active_only, detect_active
from fleetplan.kinematics import Infeasible, discrete_min_time, min_time_tpbvp
from fleetplan.planners import PlannerConfig, plan_full_range, plan_heuristic, run_planner, validate_result
from fleetplan.planners.base import relaxed_solutions, solve_single
from fleetplan.road_network import PathPlan, RoadNetwork, VehicleParams
from fleetplan.scenarios import Scenario, Vehicle, make_grid, make_toy_case

PLANNERS = ("full", "interval", "midpoint", "heuristic", "reactive")
TOL = 1e-6


def single(x_f, p):
    return SimpleNamespace(id=1, x_f=x_f, params=p)


def test_criterion_1_single_vehicle_optimality():
    rng = random.Random(2024)
    bad, slow, oracle_bad, worst = [], 0, 0, 0.0
    for _ in range(50):
        x_f, v_max, a = rng.uniform(20, 300), rng.uniform(5, 15), rng.uniform(1, 4)
        p = VehicleParams(v_max=v_max, a_max=a, a_min=-a)
        want = math.ceil(min_time_tpbvp(x_f, 0, 0, p).T - 1e-9)
        t0 = time.perf_counter()
        got = solve_single(single(x_f, p), 1.0, PlannerConfig()).arrival_step
        elapsed = time.perf_counter() - t0
        worst = max(worst, elapsed)
        slow += elapsed >= 1.0
        if got != want:
            bad.append((round(x_f, 2), got, want))
        oracle_bad += got != discrete_min_time(x_f, 0, 0, p, 1.0).arrival_step
    # wider draw, informational: how often the exact step count exceeds ceil(T / dt)
    wide = random.Random(7)
    over = 0
    for _ in range(2000):
        p = VehicleParams(v_max=wide.uniform(1, 15), a_max=(a := wide.uniform(0.5, 4)), a_min=-a)
        x_f = wide.uniform(1, 300)
        over += discrete_min_time(x_f, 0, 0, p, 1.0).arrival_step > math.ceil(min_time_tpbvp(x_f, 0, 0, p).T - 1e-9)
    ok = not bad and slow == 0 and oracle_bad == 0
    report(1, ok, f"50 instances, {len(bad)} off ceil(T/dt), {oracle_bad} off the exact discrete oracle, "
                  f"slowest {worst:.3f} s; wider draw needs ceil+1 on {over / 20:.1f}% of 2000")
    assert ok, bad


def test_criterion_2_optimality_preservation():
    gaps = {}
    for name in ("grid1", "grid2", "grid3", "toy1", "toy2"):
        full = plan(name, "full").objective
        gaps[name] = max(abs(plan(name, m).objective - full) for m in ("interval", "midpoint"))
    worst = max(gaps.values())
    ok = worst <= TOL
    report(2, ok, f"largest |iterative - full| objective gap {worst:.2g} s over {', '.join(gaps)}")
    assert ok, gaps


def test_criterion_3_order_enumeration_oracle():
    mismatches = []
    corpus = two_vehicle_corpus()
    for sc in corpus:
        want = min(order_oracle(sc).values())
        got = plan_full_range(sc).total_delay
        if abs(got - want) > TOL:
            mismatches.append((sc.label, got, want))
    ok = not mismatches
    report(3, ok, f"{len(corpus) - len(mismatches)}/{len(corpus)} two-vehicle instances match the oracle")
    assert ok, mismatches


def test_criterion_4_toy_case_dominance():
    problems = []
    heur, milp = {}, {}
    for m in range(2, 6):
        sc = make_toy_case(1, m)
        h, f = plan_heuristic(sc), plan_full_range(sc)
        heur[m], milp[m] = h.total_delay, f.total_delay
        if not f.total_delay < h.total_delay - TOL:
            problems.append(f"case 1 m={m}: MILP {f.total_delay} not below heuristic {h.total_delay}")
        if [v for v, d in f.delays.items() if d > TOL] != [1]:
            problems.append(f"case 1 m={m}: MILP delays {f.delays}")
    for m in range(3, 6):
        if heur[m] - heur[m - 1] < heur[2] / 2 - TOL:
            problems.append(f"case 1 heuristic delay not linear in m: {heur}")
    if len({round(d, 6) for d in milp.values()}) != 1:
        problems.append(f"case 1 MILP delay varies with m: {milp}")
    h2, f2 = plan("toy2", "heuristic"), plan("toy2", "full")
    chained = sum(e["adjusted"] == 1 for e in h2.extra["log"])
    if chained < 2:
        problems.append(f"case 2: vehicle 1 adjusted {chained} time(s)")
    if [v for v, d in f2.delays.items() if d > TOL] != [2]:
        problems.append(f"case 2: MILP delays {f2.delays}")
    if not f2.total_delay < h2.total_delay - TOL:
        problems.append("case 2: MILP not below heuristic")
    ok = not problems
    report(4, ok, f"case 1 heuristic {[heur[m] for m in heur]} vs MILP {[milp[m] for m in milp]} s; "
                  f"case 2 heuristic {h2.total_delay} ({chained} chained) vs MILP {f2.total_delay} s")
    assert ok, problems


def test_criterion_5_delay_ordering():
    problems, rows = [], []
    names = [f"grid{n}" for n in range(1, 5)] + [f"mine{s}" for s in MINE_SEEDS]
    for name in names:
        sc = named(name)
        r, h, m = (plan(name, p).total_delay for p in ("reactive", "heuristic", "full"))
        rows.append(f"{name} {r:g}/{h:g}/{m:g}")
        relaxed = relaxed_solutions(sc, PlannerConfig())
        any_active = bool(active_only(detect_active(relaxed, sc.geometry, 0.0)))
        if not (r >= h - TOL and h >= m - TOL):
            problems.append(f"{name}: reactive {r}, heuristic {h}, MILP {m}")
        if any_active and not r > m + TOL:
            problems.append(f"{name}: reactive {r} not above MILP {m}")
    ok = not problems
    report(5, ok, "reactive/heuristic/MILP delay " + ", ".join(rows))
    assert ok, problems


def _median_time(name, planner, reps=5):
    sc = named(name)
    times = []
    for _ in range(reps):
        times.append(run_planner(planner, sc).wall_time)
    return statistics.median(times)


def test_criterion_6_lazy_constraint_efficiency():
    problems, medians = [], {}
    for n in (2, 3, 4):
        name = f"grid{n}"
        iv, full = plan(name, "interval"), plan(name, "full")
        if not iv.constraint_steps_added < full.constraint_steps_added:
            problems.append(f"{name}: interval adds {iv.constraint_steps_added} >= full {full.constraint_steps_added}")
        if iv.solves > 2:
            problems.append(f"{name}: interval used {iv.solves} solves")
        med = {p: _median_time(name, p) for p in ("interval", "midpoint", "full")}
        medians[name] = med
        if not med["interval"] <= med["midpoint"] <= med["full"]:
            problems.append(f"{name}: medians " + ", ".join(f"{p} {t:.3f}" for p, t in med.items()))
    sizes, heur_times = [], []
    for n in range(1, 7):
        sc = make_grid(n)
        plan_heuristic(sc)   # warm caches and imports before timing
        heur_times.append(statistics.median(plan_heuristic(sc).wall_time for _ in range(3)))
        sizes.append(n)
    slope = float(np.polyfit(np.log(sizes), np.log(heur_times), 1)[0])
    if not slope < 2:
        problems.append(f"heuristic log-log slope {slope:.2f}")
    ok = not problems
    timing = "; ".join(f"{k} " + "/".join(f"{t:.2f}" for t in v.values()) for k, v in medians.items())
    report(6, ok, f"median s interval/midpoint/full {timing}; heuristic slope {slope:.2f}"
                  + (f"; {problems}" if problems else ""))
    assert ok, problems


def test_criterion_7_goal_window_soundness():
    problems = []
    scenarios = [named(n) for n in ("grid1", "grid2", "grid3", "toy1", "toy2")] + two_vehicle_corpus()
    for sc in scenarios:
        narrow = plan_full_range(sc)
        wide = plan_full_range(sc, PlannerConfig(goal_window=False))
        if not narrow.extra["goal_binaries"] < wide.extra["goal_binaries"]:
            problems.append(f"{sc.label}: goal binaries {narrow.extra['goal_binaries']} vs {wide.extra['goal_binaries']}")
        if abs(narrow.objective - wide.objective) > TOL:
            problems.append(f"{sc.label}: objective {narrow.objective} vs {wide.objective}")
    ok = not problems
    report(7, ok, f"{len(scenarios)} multi-vehicle scenarios, windowed models smaller with equal optimum")
    assert ok, problems


def test_criterion_8_distance_objective():
    problems = []
    cases = []
    for x_f in (12.0, 75.0, 160.0, 240.0):
        net = RoadNetwork.from_edges([("S", "G", x_f)])
        cases.append(Scenario(net, [Vehicle(1, PathPlan.along(net, 1, ["S", "G"]), VehicleParams())], 1.0,
                              f"single{x_f:g}"))
    cases.append(make_grid(1))
    for sc in cases:
        rep = compare_objectives(sc, strict=False)
        if rep["max_arrival_gap"] > 1:
            problems.append(f"{sc.label}: arrival gap {rep['max_arrival_gap']}")
        if rep["distance"]["goal_binaries"] != 0:
            problems.append(f"{sc.label}: distance model has {rep['distance']['goal_binaries']} goal binaries")
    ok = not problems
    report(8, ok, f"{len(cases)} instances, distance and time objectives within one step, no goal binaries")
    assert ok, problems


def test_criterion_9_safety():
    problems, checked = [], 0
    names = ([f"grid{n}" for n in range(1, 5)] + ["toy1", "toy2"] + [f"mine{s}" for s in MINE_SEEDS])
    runs = [(name, named(name), lambda p, n=name: plan(n, p)) for name in names]
    for m in range(2, 6):
        sc = make_toy_case(1, m)
        runs.append((sc.label, sc, lambda p, s=sc: run_planner(p, s)))
    for sc in two_vehicle_corpus():
        runs.append((sc.label, sc, lambda p, s=sc: run_planner(p, s)))
    for label, sc, runner in runs:
        for p in PLANNERS:
            try:
                res = runner(p)
            except Infeasible as exc:
                problems.append(f"{label}/{p}: {exc}")
                continue
            issues = validate_result(sc, res)
            checked += 1
            if issues:
                problems.append(f"{label}/{p}: {issues[:3]}")
    ok = not problems
    report(9, ok, f"{checked} planner outputs on {len(runs)} scenarios checked")
    assert ok, problems


def test_criterion_10_determinism(tmp_path):
    cfg = BenchConfig(scenarios=["grid2", "toy2", "mine"], planners=list(PLANNERS), seed=11,
                      mine_vertices=60, mine_vehicles=10)
    a = run_matrix(cfg, tmp_path / "a")["paths"]
    b = run_matrix(cfg, tmp_path / "b")["paths"]
    same = all(strip_time_columns(a[k].read_text()) == strip_time_columns(b[k].read_text()) for k in a)
    report(10, same, f"{len(a)} CSV files compared byte for byte without time columns")
    assert same
