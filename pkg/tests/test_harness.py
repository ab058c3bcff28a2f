import csv
import io
import json
import random

import numpy as np
import pytest

from isac_nd import harness
from isac_nd.config import ConfigError, ScenarioConfig
from isac_nd.harness import ExperimentResult


@pytest.fixture(scope="module")
def result():
    cfg = ScenarioConfig(n_nodes=10, beamwidth_deg=36, algorithms=("G-nRS",), replications=6, base_seed=3)
    return harness.run_experiment(cfg)


def test_seeds_and_aggregates(result):
    assert [r.seed for r in result.records] == [3, 4, 5, 6, 7, 8]
    times = [r.detection_slot for r in result.records]
    assert result.mean_convergence == pytest.approx(np.mean(times))
    assert result.median_convergence == np.median(times)
    assert result.ci_halfwidth == pytest.approx(1.959964 * np.std(times, ddof=1) / np.sqrt(6), rel=1e-6)
    assert 0 <= result.completeness_rate <= 1 and not result.non_convergent


def test_nd_curve_monotone_and_consistent(result):
    curve = result.nd_curve()
    assert np.all(np.diff(curve) >= 0)
    finals = [r.nd_ratio()[-1] for r in result.records]
    assert curve[-1] == pytest.approx(np.mean(finals))
    if result.completeness_rate == 1.0:
        assert curve[-1] == 1.0


def test_replication_order_independence(result):
    shuffled = list(result.records)
    random.Random(0).shuffle(shuffled)
    other = ExperimentResult(result.config, result.algorithm, shuffled)
    assert other.mean_convergence == result.mean_convergence
    assert other.median_convergence == result.median_convergence
    assert other.completeness_rate == result.completeness_rate
    assert np.allclose(other.nd_curve(), result.nd_curve(), rtol=0, atol=1e-15)


def test_deterministic_and_parallel_equal(result):
    again = harness.run_experiment(result.config)
    assert again.records == result.records
    par = harness.run_experiment(result.config, workers=2)
    assert par.records == result.records


def test_json_round_trip_is_exact(result, tmp_path):
    path = tmp_path / "r.json"
    harness.emit(result, "json", path)
    back = harness.load_result(path)
    assert back.records == result.records and back.config == result.config
    assert back.summary() == result.summary()
    assert json.dumps(back.summary()) == json.dumps(result.summary())


def test_csv_formats(result, tmp_path):
    text = harness.emit(result, "csv", tmp_path / "sim.csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == list(harness.SIMULATION_COLUMNS)
    assert len(rows) == result.longest_run + 1
    assert harness.emit(None, "csv") == "slot,mean_nd_ratio,ci_halfwidth\n"
    assert harness.emit([], "csv") == ",".join(harness.SUMMARY_COLUMNS) + "\n"
    summary = list(csv.reader(io.StringIO(harness.emit([result], "csv"))))
    assert summary[1][:3] == ["G-nRS", "10", "1.0"]
    with pytest.raises(ValueError):
        harness.emit(result, "xml")
    with pytest.raises(OSError):
        harness.emit(result, "csv", tmp_path / "missing" / "x.csv")


def test_compare_emits_one_column_per_algorithm():
    cfg = ScenarioConfig(n_nodes=8, beamwidth_deg=90, algorithms=("G-nRS", "G-RnS", "CRA"), replications=2)
    res = harness.compare(cfg)
    rows = list(csv.reader(io.StringIO(harness.emit(res, "csv"))))
    assert rows[0] == ["slot", "G-nRS", "G-RnS", "CRA"]
    assert len(rows) - 1 == max(r.longest_run for r in res.values())
    # paired seeds
    assert [r.seed for r in res["CRA"].records] == [r.seed for r in res["G-RnS"].records]


def test_sweep():
    cfg = ScenarioConfig(n_nodes=8, beamwidth_deg=36, algorithms=("G-RnS",), replications=3)
    out = harness.sweep(cfg, "N", [5, 15])
    assert [r.config.n_nodes for r in out] == [5, 15]
    assert out[0].mean_convergence < out[1].mean_convergence
    assert harness.sweep(cfg, "rc_ratio", []) == []
    assert harness.sweep(cfg, "beamwidth", [90])[0].config.beam_count == 4
    with pytest.raises(ConfigError):
        harness.sweep(cfg, "p_transmit", [0.3])


def test_theory_dispatch():
    cfg = ScenarioConfig(n_nodes=2, beamwidth_deg=360, algorithms=("G-RnS",), horizon=8)
    series = harness.theory(cfg)
    assert np.allclose(series.prob, 1 - 0.5 ** np.arange(1, 9))
    assert len(harness.theory(cfg.replace(horizon=0)).prob) == 0
    with pytest.raises(ConfigError):
        harness.theory(cfg, "GQ-nRnS")
    rows = list(csv.reader(io.StringIO(harness.emit(series, "csv"))))
    assert rows[0] == ["t", "D", "I", "P", "N_expected"] and rows[1][0] == "1"


def test_fit_report_and_joined_csv():
    cfg = ScenarioConfig(n_nodes=12, beamwidth_deg=36, algorithms=("G-RnS",), replications=10)
    res = harness.run_experiment(cfg)
    rep = harness.fit_report(res)
    assert 0 < rep.ramp_end <= res.longest_run
    assert rep.relative_mad == pytest.approx(rep.mad / 11)
    rows = list(csv.reader(io.StringIO(harness.emit(rep, "csv"))))
    assert rows[0] == list(harness.VALIDATE_COLUMNS)
    assert [int(r[0]) for r in rows[1:]] == list(range(1, res.longest_run + 1))
    assert json.loads(harness.emit(rep, "json"))["passed"] == rep.passed


def test_ramp_end():
    assert harness.ramp_end(np.array([0.0, 1.0, 5.0, 9.0, 10.0])) == 4
    assert harness.ramp_end(np.array([])) == 0


def test_capped_runs_flag_non_convergence():
    cfg = ScenarioConfig(n_nodes=20, algorithms=("CRA",), replications=3, slot_cap=10, warmup=50)
    res = harness.run_experiment(cfg)
    assert res.capped_runs == 3 and res.non_convergent


def test_event_log(tmp_path):
    cfg = ScenarioConfig(n_nodes=5, beamwidth_deg=90, algorithms=("G-RnS",), replications=2)
    log = tmp_path / "ev.jsonl"
    res = harness.run_experiment(cfg, event_log=log)
    lines = [json.loads(x) for x in log.read_text().splitlines()]
    assert [x["seed"] for x in lines if x["event"] == "run"] == [0, 1]
    assert res.records == harness.run_experiment(cfg).records
