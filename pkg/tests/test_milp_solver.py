import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fleetplan.milp import (GE, INFEASIBLE, ITERATION_LIMIT, LE, OPTIMAL, BuiltinBackend, HighsBackend, MilpModel,
                            add_avoidance, build_fleet, build_single, export_lp, get_backend, read_lp, solve,
                            solve_lp, solve_milp)
from fleetplan.road_network import Crossing, VehicleParams

P = VehicleParams()


def tiny_lp(lo_row):
    m = MilpModel(1.0, 0)
    x = m.add_var("x", 0, 10)
    m.objective[x] = 1.0
    m.add_row([(x, 1.0)], GE, lo_row)
    return m, x


def test_lp_examples():
    m, _ = tiny_lp(3)
    res = solve_lp(m)
    assert res.status == OPTIMAL and res.objective == pytest.approx(3)
    assert res.stats["simplex_iterations"] >= 0

    m, x = tiny_lp(2)
    m.add_row([(x, 1.0)], LE, 1)
    assert solve_lp(m).status == INFEASIBLE
    assert solve(m, "highs").status == INFEASIBLE
    assert solve_milp(m).status == INFEASIBLE


def test_relaxation_bounds_integer_optimum():
    m = build_single(40, P, 1.0, K=12)
    relaxed = solve_lp(m)
    integer = solve(m, "builtin")
    assert relaxed.status == integer.status == OPTIMAL
    assert relaxed.objective <= integer.objective + 1e-9


def test_builtin_single_vehicle_100m():
    res = solve(build_single(100, P, 1.0, K=20), "builtin")
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(14)
    assert res.stats["nodes"] >= 1


def test_fixed_binaries_match_lp():
    m = build_single(40, P, 1.0, K=12)
    b = m.vehicles[0].b
    for k in range(1, 13):
        m.lb[b[k]] = m.ub[b[k]] = 1.0 if k == 8 else 0.0
    milp, lp = solve_milp(m), solve_lp(m)
    assert milp.status == lp.status == OPTIMAL
    assert milp.objective == pytest.approx(lp.objective)
    assert milp.stats["nodes"] == 1


def test_iteration_limit():
    res = solve_lp(build_single(100, P, 1.0, K=20), max_iter=3)
    assert res.status == ITERATION_LIMIT
    res = BuiltinBackend(max_iter=5).solve(build_single(100, P, 1.0, K=20))
    assert res.status == ITERATION_LIMIT


def test_reproducible():
    fleet = build_fleet([(1, 120.0, P), (2, 120.0, P)], 1.0, 25)
    add_avoidance(fleet, Crossing((1, 2), "X", (55.0, 80.0), (55.0, 80.0)), range(1, 26))
    for backend, m in (("highs", fleet), ("builtin", build_single(40, P, 1.0, K=12))):
        a, b = solve(m, backend), solve(m, backend)
        assert a.status == b.status == OPTIMAL
        assert np.array_equal(a.values, b.values)


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("cplex")
    assert isinstance(get_backend(), HighsBackend)


def lp_corpus():
    """Small exported planning models."""
    out = []
    for x_f in (12.0, 40.0, 75.0):
        out.append(export_lp(build_single(x_f, P, 1.0)))
    m = build_fleet([(1, 25.0, P), (2, 25.0, P)], 1.0, 11)
    add_avoidance(m, Crossing((1, 2), "X", (5.0, 20.0), (5.0, 20.0)), range(3, 7))
    out.append(export_lp(m))
    return out


@pytest.mark.parametrize("text", lp_corpus(), ids=lambda t: f"{len(t)}b")
def test_backend_equivalence_on_lp_corpus(text):
    model = read_lp(text)
    a, b = solve(model, "builtin"), solve(model, "highs")
    assert a.status == b.status == OPTIMAL
    assert a.objective == pytest.approx(b.objective, abs=1e-6)


def test_backend_equivalence_on_infeasible_model():
    m = build_fleet([(1, 20.0, P), (2, 20.0, P)], 1.0, 8)
    add_avoidance(m, Crossing((1, 2), "X", (2.0, 17.0), (2.0, 17.0)), range(1, 9))
    assert solve(m, "builtin").status == solve(m, "highs").status == INFEASIBLE


@st.composite
def knapsacks(draw):
    n = draw(st.integers(1, 6))
    m = MilpModel(1.0, 0)
    idx = [m.add_var(f"b{k}", 0, 1, binary=True) for k in range(n)]
    y = m.add_var("y", 0, draw(st.integers(0, 5)))
    for i in idx:
        m.objective[i] = -float(draw(st.integers(1, 9)))
    m.objective[y] = -float(draw(st.integers(0, 3)))
    for _ in range(draw(st.integers(1, 3))):
        coefs = [(i, float(draw(st.integers(0, 6)))) for i in idx] + [(y, float(draw(st.integers(0, 3))))]
        m.add_row(coefs, LE, float(draw(st.integers(0, 12))))
    return m, idx, y


def brute_force(m, idx, y):
    """Enumerate binaries; y is the only continuous variable, so solve it by a bound scan."""
    best = math.inf
    for bits in itertools.product((0.0, 1.0), repeat=len(idx)):
        hi = m.ub[y]
        for row in m.rows:
            used = sum(row.coefs.get(i, 0.0) * b for i, b in zip(idx, bits))
            cy = row.coefs.get(y, 0.0)
            if cy > 0:
                hi = min(hi, (row.rhs - used) / cy)
            elif used > row.rhs + 1e-9:
                hi = -1
        if hi < 0:
            continue
        val = sum(m.objective[i] * b for i, b in zip(idx, bits))
        val += min(0.0, m.objective[y] * hi)
        best = min(best, val)
    return best


@settings(max_examples=80)
@given(knapsacks())
def test_builtin_matches_enumeration(case):
    m, idx, y = case
    expect = brute_force(m, idx, y)
    for backend in ("builtin", "highs"):
        res = solve(m, backend)
        if math.isinf(expect):
            assert res.status == INFEASIBLE
        else:
            assert res.status == OPTIMAL
            assert res.objective == pytest.approx(expect, abs=1e-6)
