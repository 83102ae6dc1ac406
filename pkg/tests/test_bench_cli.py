import csv
from dataclasses import replace
import xml.etree.ElementTree as ET

import pytest

from corpus import named, parallel, plan
from fleetplan.bench import compare_objectives, run_matrix, strip_time_columns
from fleetplan.cli import main
from fleetplan.config import BenchConfig, ConfigError, load_config, parse_config
from fleetplan.milp.model import NonzeroFinalVelocity, UnknownVehicle
from fleetplan.planners import PlannerConfig
from fleetplan.planners.base import relaxed_solutions
from fleetplan.plot import plot_trajectory
from fleetplan.results import ResultFormatError, load_result, save_result
from fleetplan.road_network import VehicleParams
from fleetplan.scenarios import make_grid, make_toy_case, save_scenario

SVG = "{http://www.w3.org/2000/svg}"


def read_rows(path):
    return list(csv.DictReader(l for l in path.read_text().splitlines() if not l.startswith("#")))


@pytest.fixture(scope="module")
def matrix(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    cfg = BenchConfig(scenarios=["grid1", "grid2", "grid3"])
    return run_matrix(cfg, out)


def test_matrix_rows_and_delay_ordering(matrix):
    rows = read_rows(matrix["paths"]["rows"])
    assert len(rows) == 15
    for grid in ("grid1", "grid2", "grid3"):
        d = {r["planner"]: float(r["delay_s"]) for r in rows if r["scenario"] == grid}
        milp = d["full"]
        assert d["interval"] == d["midpoint"] == milp
        assert d["reactive"] >= d["heuristic"] >= milp
    assert matrix["paths"]["rows"].read_text().startswith("# fleetplan bench-rows v1\n")


def test_matrix_aggregate_tables(matrix):
    times = read_rows(matrix["paths"]["times"])
    assert [r["scenario"] for r in times] == ["grid1", "grid2", "grid3"]
    assert set(times[0]) == {"scenario", "full_time_s", "interval_time_s", "midpoint_time_s",
                             "heuristic_time_s", "reactive_time_s"}
    delays = read_rows(matrix["paths"]["delays"])
    assert [int(r["vehicles"]) for r in delays] == [2, 4, 6]


def test_empty_lists_are_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        run_matrix(BenchConfig(planners=[]), tmp_path)
    with pytest.raises(ConfigError) as err:
        parse_config('scenarios = ["grid1"]\nplanners = []\n')
    assert err.value.line == 2


def test_repetitions_give_identical_delays(tmp_path):
    res = run_matrix(BenchConfig(scenarios=["grid1"], planners=["interval", "heuristic"], repetitions=3), tmp_path)
    for planner in ("interval", "heuristic"):
        delays = {r["delay_s"] for r in res["rows"] if r["planner"] == planner}
        assert len(delays) == 1


def test_csv_is_deterministic(tmp_path):
    cfg = BenchConfig(scenarios=["grid2", "toy1"], planners=["full", "reactive"])
    a = run_matrix(cfg, tmp_path / "a")["paths"]
    b = run_matrix(cfg, tmp_path / "b")["paths"]
    for key in a:
        assert strip_time_columns(a[key].read_text()) == strip_time_columns(b[key].read_text())
    assert "wall_time_s" not in strip_time_columns(a["rows"].read_text())


@pytest.mark.parametrize("text, line", [
    ('dt = 1.0\nv_max = -3\n', 2),
    ('planners = ["full"]\n\n[solver]\nbackend = "cplex"\n', 4),
    ('scenarios = ["grid1", "ring"]\n', 1),
    ('repetitions = 1.5\n', 1),
    ('[milp]\ngoal_window = "maybe"\n', 2),
    ('colour = 3\n', 1),
    ('dt = = 1\n', 1),
])
def test_config_errors_report_lines(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "bench.toml")
    assert err.value.line == line
    assert str(err.value).startswith(f"bench.toml:{line}: ")


def test_config_values():
    cfg = parse_config('planner = "milp"\nmode = "midpoint"\nv_max = 12\na_min = 2.5\n'
                       '[reactive]\nbuffer = 4\n[milp]\ngoal_window = "off"\n')
    assert cfg.planners == ["midpoint"]
    assert cfg.vehicle.v_max == 12 and cfg.vehicle.a_min == -2.5
    assert cfg.planner.buffer == 4 and cfg.planner.goal_window is False


def test_seed_override(monkeypatch, tmp_path):
    monkeypatch.delenv("FLEET_SEED", raising=False)
    assert parse_config("seed = 3\n").seed == 3
    monkeypatch.setenv("FLEET_SEED", "11")
    assert parse_config("seed = 3\n").seed == 11
    monkeypatch.setenv("FLEET_SEED", "x")
    with pytest.raises(ConfigError):
        parse_config("")
    monkeypatch.setenv("FLEET_SEED", "11")
    cfg = tmp_path / "c.toml"
    cfg.write_text('[mine]\nvertices = 40\nvehicles = 4\n')
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["scenario", "mine", "--out", str(a), "--config", str(cfg)]) == 0
    monkeypatch.setenv("FLEET_SEED", "12")
    assert main(["scenario", "mine", "--out", str(b), "--config", str(cfg)]) == 0
    assert a.read_text() != b.read_text()


def test_cli_plan_and_plot(tmp_path, capsys):
    scen = tmp_path / "grid1.txt"
    save_scenario(make_grid(1), scen)
    assert main(["plan", str(scen), "--planner", "full", "--out", str(tmp_path)]) == 0
    result = tmp_path / "grid1_full.json"
    assert result.exists()
    assert main(["plot", str(result), "--vehicle", "1"]) == 0
    ET.fromstring(result.with_suffix(".v1.svg").read_text())
    assert main(["plot", str(result), "--vehicle", "9"]) == 2
    assert main(["bench", "--config", str(tmp_path / "missing.toml")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("planners = []\n")
    assert main(["bench", "--config", str(bad)]) == 2
    assert "bad.toml:1" in capsys.readouterr().err


def test_cli_unknown_vertex_and_planner_failure(tmp_path):
    scen = tmp_path / "s.txt"
    scen.write_text("e A B 100\ntask 1 A Z\n")
    assert main(["plan", str(scen), "--out", str(tmp_path)]) == 2
    save_scenario(make_grid(1), scen)
    cfg = tmp_path / "c.toml"
    cfg.write_text('planner = "interval"\n[milp]\nmax_iterations = 1\n')
    assert main(["plan", str(scen), "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_cli_bench(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'scenarios = ["grid1"]\nplanners = ["heuristic", "reactive"]\noutput = "{tmp_path / "o"}"\n')
    assert main(["bench", "--config", str(cfg)]) == 0
    assert len(read_rows(tmp_path / "o" / "rows.csv")) == 2


def svg_parts(svg):
    root = ET.fromstring(svg)
    rects = root.findall(f"{SVG}rect")
    bands = [r for r in rects if r.get("class") == "band"]
    occ = [r for r in rects if (r.get("class") or "").startswith("occupancy")]
    return root.findall(f"{SVG}polyline"), bands, occ


def test_plot_single_vehicle():
    sc = parallel(1)
    lines, bands, occ = svg_parts(plot_trajectory(sc, relaxed_solutions(sc, PlannerConfig()), 1))
    assert len(lines) == 2 and bands == [] and occ == []


def test_plot_toy1_relaxed_marks_three_active():
    sc = make_toy_case(1)
    _, bands, occ = svg_parts(plot_trajectory(sc, relaxed_solutions(sc, PlannerConfig()), 1))
    assert len(bands) == 3 and len(occ) == 3
    assert all("active" in r.get("class").split() for r in occ)


def test_plot_grid1_final_all_inactive():
    _, bands, occ = svg_parts(plot_trajectory(named("grid1"), plan("grid1", "full").trajectories, 2))
    assert len(bands) == 1 and len(occ) == 1
    assert occ[0].get("class") == "occupancy inactive"


def test_plot_unknown_vehicle():
    with pytest.raises(UnknownVehicle):
        plot_trajectory(named("grid1"), plan("grid1", "full").trajectories, 7)


def test_compare_objectives_grid1():
    rep = compare_objectives(make_grid(1))
    assert rep["time_window"]["binaries"] < rep["time_full"]["binaries"]
    assert rep["distance"]["goal_binaries"] == 0
    assert rep["agree"] and rep["max_arrival_gap"] <= 1


def test_compare_objectives_single_vehicle():
    rep = compare_objectives(parallel(1))
    arrivals = {v: rep[v]["arrivals"][1] for v in ("time_full", "time_window", "distance")}
    assert len(set(arrivals.values())) == 1


def test_compare_objectives_rejects_moving_goal():
    sc = parallel(1)
    sc.fleet[0] = replace(sc.fleet[0], params=VehicleParams(vf=5.0))
    with pytest.raises(NonzeroFinalVelocity):
        compare_objectives(sc)


def test_result_round_trip(tmp_path):
    sc, res = named("toy2"), plan("toy2", "heuristic")
    path = save_result(tmp_path / "r.json", sc, res)
    sc2, res2 = load_result(path)
    assert res2.total_delay == res.total_delay and res2.objective == res.objective
    assert res2.planner == "heuristic" and sc2.ids == sc.ids
    (tmp_path / "bad.json").write_text('{"format": "other"}')
    with pytest.raises(ResultFormatError):
        load_result(tmp_path / "bad.json")


def test_load_config_file(tmp_path):
    p = tmp_path / "b.toml"
    p.write_text('scenarios = ["toy2_m4", "mine7"]\nrepetitions = 2\n')
    cfg = load_config(p)
    assert cfg.scenarios == ["toy2_m4", "mine7"] and cfg.repetitions == 2
