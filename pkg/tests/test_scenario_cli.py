import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import groupcons.reduction as reduction
from groupcons.analysis import analyze, format_text, group_consensus_verdict, round_sig
from groupcons.cli import main
from groupcons.control import oscillator, single_integrator
from groupcons.errors import InfeasibleTopologyError
from groupcons.generate import g_toy, g_toy2, oscillator_surrogate, random_eep_graph
from groupcons.scenario import (
    ScenarioError,
    dump_scenario,
    load_scenario,
    parse_scenario,
    resolve,
    scenario_file_from,
)


def _write(tmp_path, name, sf):
    path = tmp_path / name
    path.write_text(dump_scenario(sf))
    return str(path)


def _broken_toy():
    g = g_toy()
    w = g.weights.copy()
    w[0, 1] = w[1, 0] = 0.0
    return g.with_weights(w)


@pytest.fixture
def toy_file(tmp_path):
    return _write(tmp_path, "toy.json", scenario_file_from(g_toy(), oscillator(), t_final=20.0, dt=0.01))


@pytest.fixture
def surrogate_file(tmp_path):
    return _write(tmp_path, "surrogate.json", scenario_file_from(oscillator_surrogate(), oscillator(), dt=0.01))


# scenario files


@given(st.integers(0, 10_000), st.sampled_from(["auto-group", "auto-pattern", 0.75]))
def test_scenario_round_trip(seed, delta):
    g = random_eep_graph([2, 3, 1], seed=seed)
    sf = scenario_file_from(g, oscillator(), delta=delta, seed=seed, x0=list(np.random.default_rng(seed).random(12)))
    text = dump_scenario(sf)
    again = parse_scenario(text)
    assert again == sf
    assert dump_scenario(again) == text
    h = again.graph()
    np.testing.assert_array_equal(h.weights, g.weights)


def test_noncontiguous_clusters_and_x0_order(tmp_path):
    doc = {
        "agents": 3,
        "clusters": [[1, 3], [2]],
        "edges": [{"from": 1, "to": 3, "weight": 1.0}, {"from": 2, "to": 1, "weight": 0.5},
                  {"from": 2, "to": 3, "weight": 0.5}],
        "dynamics": {"A": [[0.0]], "B": [[1.0]]},
        "coupling": {"delta": 1.0},
        "sim": {"x0": [10.0, 20.0, 30.0], "t_final": 1.0, "dt": 0.5},
    }
    sf = parse_scenario(json.dumps(doc))
    sc = resolve(sf)
    # internal order is agents 1, 3, 2
    np.testing.assert_array_equal(sc.x0, [10.0, 30.0, 20.0])


@pytest.mark.parametrize(
    "mutate, match",
    [
        (lambda d: d.pop("agents"), "'agents': missing"),
        (lambda d: d.update(agents=0), "'agents'"),
        (lambda d: d["edges"][1].update(weight=-1), r"edges\[1\].weight"),
        (lambda d: d["edges"][0].update(to=9), r"edges\[0\].to"),
        (lambda d: d["clusters"].append([]), r"clusters\[2\]"),
        (lambda d: d["dynamics"].update(A=[[0, 1], [1]]), r"dynamics.A\[1\]"),
        (lambda d: d["coupling"].update(delta="strong"), "coupling.delta"),
        (lambda d: d["coupling"].update(delta=0), "coupling.delta"),
        (lambda d: d["sim"].update(dt=0), "sim.dt"),
        (lambda d: d["sim"].update(integrator="euler"), "sim.integrator"),
        (lambda d: d["sim"].update(x0=[1.0]), "sim.x0"),
        (lambda d: d["sim"].update(seed=1.5), "sim.seed"),
    ],
)
def test_field_diagnostics(mutate, match):
    doc = json.loads(dump_scenario(scenario_file_from(g_toy(), oscillator())))
    mutate(doc)
    with pytest.raises(ScenarioError, match=match):
        parse_scenario(json.dumps(doc))


def test_json_location_reported():
    with pytest.raises(ScenarioError, match="line 3, column"):
        parse_scenario('{\n  "agents": 2,\n  oops\n}')


def test_graph_errors_surface_as_scenario_errors():
    doc = json.loads(dump_scenario(scenario_file_from(g_toy(), oscillator())))
    doc["edges"].append(dict(doc["edges"][0]))
    with pytest.raises(ScenarioError, match="graph: .*duplicate"):
        parse_scenario(json.dumps(doc)).graph()


def test_auto_coupling_resolution():
    sf = scenario_file_from(g_toy(), oscillator())
    assert resolve(sf, "auto-group").delta == pytest.approx(0.25)
    assert resolve(sf, "auto-pattern").delta == pytest.approx(1.0)
    assert resolve(sf, 3.0).delta == 3.0
    bad = scenario_file_from(_broken_toy(), oscillator())
    for choice in ("auto-group", "auto-pattern"):
        with pytest.raises(InfeasibleTopologyError):
            resolve(bad, choice)
    assert resolve(bad, 1.0).delta == 1.0


# analysis report


def test_toy_report():
    report = analyze(g_toy(), oscillator())
    assert report["feasible"] and report["m_graph"] == report["m_quotient"] == 1
    assert report["delta_group"] == 0.25 and report["delta_pattern"] == 1.0
    assert report["cluster_spanning_trees"] == {"holds": True, "roots": [1, 1]}
    assert report["quotient_weights"] == [[0.0, 0.0], [0.5, 0.0]]
    assert report["K"] == [[0.414213562373, 1.35219344945]]
    assert report["reach_decomposition"]["reaches"] == [[1, 2]]
    assert list(report)[:4] == ["agents", "clusters", "eep", "quotient_weights"]
    json.dumps(report)
    assert "delta_group: 0.25" in format_text(report)


def test_toy2_report_convex_weights():
    report = analyze(g_toy2(), single_integrator())
    assert report["convex_weights"] == [[0.6, 0.4], [0.6, 0.4]]
    assert report["reach_decomposition"]["exclusive"] == [[1], [2]]
    assert report["reach_decomposition"]["common"] == [3]


def test_infeasible_report():
    report = analyze(_broken_toy(), oscillator())
    assert not report["feasible"]
    assert report["m_graph"] == 2 and report["m_quotient"] == 1
    assert report["delta_group"] is None and report["convex_weights"] is None
    assert not report["internal_error"]


def test_non_equitable_report():
    g = g_toy()
    w = g.weights.copy()
    w[3, 1] = 0.7
    report = analyze(g.with_weights(w), oscillator())
    assert not report["eep"]["holds"] and not report["feasible"]
    assert report["eep"]["violations"][0]["block"] == [2, 1]
    assert report["spectrum_Lhat"] is None


def test_verdict_zero_counts():
    v = group_consensus_verdict(oscillator_surrogate())
    assert (v.m_graph, v.m_quotient, v.spectral_zeros_graph, v.spectral_zeros_quotient) == (2, 2, 2, 2)
    assert v.feasible and not v.numerical_warning


def test_round_sig():
    assert round_sig(1 / 3) == 0.333333333333
    assert round_sig({"a": [np.float64(2 / 3), None, True, 3]}) == {"a": [0.666666666667, None, True, 3]}
    assert round_sig(-0.0) == 0.0 and not np.signbit(round_sig(-0.0))
    assert round_sig(float("inf")) == "inf"


# command line


def test_analyze_exit_codes(tmp_path, toy_file, capsys):
    assert main(["analyze", toy_file]) == 0
    out = capsys.readouterr().out
    assert "m_graph: 1" in out and "delta_group: 0.25" in out and "delta_pattern: 1\n" in out
    bad = _write(tmp_path, "bad.json", scenario_file_from(_broken_toy(), oscillator()))
    assert main(["analyze", bad, "--format", "json", "--out", str(tmp_path / "r.json")]) == 2
    assert json.loads((tmp_path / "r.json").read_text())["feasible"] is False
    (tmp_path / "broken.json").write_text('{"agents": 2,\n "clusters": [[1, 2]]')
    assert main(["analyze", str(tmp_path / "broken.json")]) == 1
    assert "line" in capsys.readouterr().err
    assert main(["analyze", str(tmp_path / "missing.json")]) == 1


def test_analyze_respects_zero_tolerance_override(toy_file, monkeypatch, capsys):
    monkeypatch.setenv("GCL_TOL_ZERO", "0.6")
    main(["analyze", toy_file, "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    # 0 and 0.5 now both count as zero eigenvalues
    assert report["spectral_zero_count_graph"] == 2
    assert report["numerical_warning"]


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_simulate_pattern_and_group(tmp_path, surrogate_file, capsys):
    out = tmp_path / "pattern"
    assert main(["simulate", surrogate_file, "--delta", "auto-pattern", "--out-dir", str(out), "--format", "json"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["final_disagreement"] <= 1e-3 and summary["prediction"] == "pass"
    assert summary["delta"] == 2.5 and not summary["diverged"]
    header, data = _read_csv(out / "trajectory.csv")
    assert header[:4] == ["t", "x1_1", "x1_2", "x2_1"]
    assert len(header) == 1 + 2 * 10 == data.shape[1]
    assert data.shape[0] <= 5000 and data[-1, 0] == 200.0

    out = tmp_path / "group"
    assert main(["simulate", surrogate_file, "--delta", "auto-group", "--out-dir", str(out)]) == 0
    text = (out / "summary.txt").read_text()
    assert "prediction: not applicable" in text and "group_consensus: True" in text
    capsys.readouterr()


def test_simulate_csv_uses_original_agent_numbering(tmp_path):
    doc = {
        "agents": 3,
        "clusters": [[1, 3], [2]],
        "edges": [{"from": 2, "to": 1, "weight": 1.0}, {"from": 2, "to": 3, "weight": 1.0}],
        "dynamics": {"A": [[0.0]], "B": [[1.0]]},
        "coupling": {"delta": 1.0},
        "sim": {"x0": [10.0, 20.0, 30.0], "t_final": 1.0, "dt": 0.5},
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    assert main(["simulate", str(path), "--out-dir", str(tmp_path), "--stride", "1"]) == 0
    header, data = _read_csv(tmp_path / "trajectory.csv")
    assert header == ["t", "x1_1", "x2_1", "x3_1"]
    np.testing.assert_array_equal(data[0], [0.0, 10.0, 20.0, 30.0])
    assert data.shape == (3, 4)


def test_simulate_errors(tmp_path, toy_file, capsys):
    assert main(["simulate", toy_file, "--dt", "0", "--out-dir", str(tmp_path)]) == 1
    assert "dt" in capsys.readouterr().err
    assert main(["simulate", toy_file, "--delta", "-1", "--out-dir", str(tmp_path)]) == 1
    assert main(["simulate", toy_file, "--delta", "sideways"]) == 1
    bad = _write(tmp_path, "bad.json", scenario_file_from(_broken_toy(), oscillator(), t_final=10.0, dt=0.01))
    assert main(["simulate", bad, "--delta", "auto-group", "--out-dir", str(tmp_path / "x")]) == 2
    assert not (tmp_path / "x").exists()
    assert main(["simulate", bad, "--delta", "1.0", "--out-dir", str(tmp_path / "y")]) == 0
    assert "prediction: not applicable" in (tmp_path / "y" / "summary.txt").read_text()


def test_simulate_integrators_agree(tmp_path, toy_file):
    for integ in ("expm", "rk4"):
        assert main(["simulate", toy_file, "--integrator", integ, "--t-final", "5", "--out-dir", str(tmp_path / integ)]) == 0
    _, a = _read_csv(tmp_path / "expm" / "trajectory.csv")
    _, b = _read_csv(tmp_path / "rk4" / "trajectory.csv")
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_gen_is_deterministic_and_analyzable(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "--clusters", "3,3,3", "--seed", "7", "--out", str(a)]) == 0
    assert main(["gen", "--clusters", "3,3,3", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    sf = load_scenario(a)
    assert sf.agents == 9 and sf.seed == 7
    assert main(["analyze", str(a)]) in (0, 2)
    assert main(["gen", "--clusters", "3,3,3", "--seed", "8"]) == 0
    assert capsys.readouterr().out != a.read_text()


def test_gen_rejects_bad_parameters(capsys):
    assert main(["gen", "--clusters", "3,0,2", "--seed", "1"]) == 1
    assert main(["gen", "--clusters", "a,b"]) == 1
    assert main(["gen", "--intra-density", "0"]) == 1
    assert main(["gen", "--weight-min", "-1"]) == 1


def test_verify_smoke(capsys):
    assert main(["verify", "--seeds", "1"]) == 0
    out = capsys.readouterr().out
    assert "spectrum split" in out and "PASS" in out


def test_verify_detects_injected_sign_bug(monkeypatch, capsys):
    good = reduction._reduced_blocks

    def flipped(g):
        lhat, gamma = good(g)
        return -lhat, gamma

    monkeypatch.setattr(reduction, "_reduced_blocks", flipped)
    assert main(["verify", "--seeds", "3", "--no-dynamics"]) != 0
    assert "FAIL" in capsys.readouterr().out


def test_usage_errors():
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["--help"]) == 0
