"""
End-to-end tests of the run, sweep and verify commands.

Run with:
  pytest ocsm_lab/test_cli.py
"""
import csv
import json

import pytest

from ocsm_lab.cli import EXIT_ERROR, EXIT_OK, EXIT_VIOLATION, main

SMALL_VERIFY = {
    "oracle_calls": 24,
    "fejer_points": 10,
    "mc_draws": 2000,
    "mc_points": 2,
    "mc_tolerance": 5.0,
    "pairs": 20,
    "instances": 2,
    "quadrature_nodes": 64,
}


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload, indent=2))
    return path


def _base(**overrides):
    payload = {
        "algorithm": "pobga",
        "set": {"kind": "simplex", "b": 1.0, "dim": 2},
        "adversary": {"family": "quadratic", "sigma": 0.1, "seed": 7},
        "horizons": [64],
        "grid": 33,
        "checkpoints": 4,
    }
    payload.update(overrides)
    return payload


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_run_writes_csv_and_summary(tmp_path):
    config = _write_config(tmp_path, _base())
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_OK

    rows = _rows(out / "pobga_T64_seed0.csv")
    assert len(rows) == 64
    assert [int(r["t"]) for r in rows] == list(range(1, 65))
    assert all(int(r["lo_steps"]) <= 64 for r in rows)
    assert rows[-1]["alpha_regret"] != ""

    summary = json.loads((out / "summary.json").read_text())
    (run,) = summary["runs"]
    assert run["verdicts"] == {"lo_steps_within_T": True, "comparator_dominance": True}
    assert run["regret_bound"] > 0
    assert summary["config"]["algorithm"] == "pobga"


def test_theorem_mode_rejects_non_square_horizon(tmp_path, caplog):
    config = _write_config(tmp_path, _base(horizons=[1000]))
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_ERROR
    assert "T must be a perfect square" in caplog.text


def test_missing_config_is_an_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == EXIT_ERROR


def test_dpobga_cycle_run(tmp_path):
    config = _write_config(tmp_path, _base(
        algorithm="dpobga",
        horizons=[256],
        network={"topology": "cycle", "nodes": 4, "weights": "metropolis"},
    ))
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out), "--threads", "2"]) == EXIT_OK

    for node in range(4):
        rows = _rows(out / f"dpobga_T256_seed0_node{node}.csv")
        assert len(rows) == 256
        assert int(rows[-1]["comms"]) == 16
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["runs"]) == 4
    for run in summary["runs"]:
        assert run["counters"]["comms"] == 16
        assert run["verdicts"] == {"lo_steps_within_T": True, "comms_equal_blocks": True, "comparator_dominance": True}


def test_seeds_flag_overrides_config(tmp_path):
    config = _write_config(tmp_path, _base(output={"csv": False}))
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out), "--seeds", "3,4"]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert [run["seed"] for run in summary["runs"]] == [3, 4]
    assert not list(out.glob("*.csv"))


def test_sweep_reports_statistics_and_slope(tmp_path):
    config = _write_config(tmp_path, _base(horizons=[16, 64, 256], seeds=[0, 1], output={"csv": False}))
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(config), "--out", str(out)]) == EXIT_OK

    summary = json.loads((out / "summary.json").read_text())
    assert [row["T"] for row in summary["sweep"]] == [16, 64, 256]
    assert all(row["count"] == 2 for row in summary["sweep"])
    assert len(summary["runs"]) == 6
    assert "slope" in summary


def test_verify_report_is_reproducible(tmp_path, capsys):
    config = _write_config(tmp_path, _base(verify=SMALL_VERIFY))
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["verify", "--config", str(config), "--out", str(first)]) == EXIT_OK
    assert main(["verify", "--config", str(config), "--out", str(second)]) == EXIT_OK

    report = (first / "verify_report.txt").read_bytes()
    assert report == (second / "verify_report.txt").read_bytes()
    assert "❌" not in report.decode("utf-8")
    assert "oracle.fejer" in capsys.readouterr().out

    properties = json.loads((first / "verify_report.json").read_text())["properties"]
    assert all(p["passed"] for p in properties)


@pytest.mark.parametrize("argv", [["run"], ["bogus", "--config", "x.json"]])
def test_parser_rejects_bad_arguments(argv):
    with pytest.raises(SystemExit):
        main(argv)


def test_parallel_runs_match_serial_runs(tmp_path):
    config = _write_config(tmp_path, _base(horizons=[16, 64], seeds=[0, 1, 2]))
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert main(["run", "--config", str(config), "--out", str(serial), "--threads", "1"]) == EXIT_OK
    assert main(["run", "--config", str(config), "--out", str(parallel), "--threads", "3"]) == EXIT_OK

    assert (serial / "summary.json").read_bytes() == (parallel / "summary.json").read_bytes()
    runs = json.loads((parallel / "summary.json").read_text())["runs"]
    assert [(run["T"], run["seed"]) for run in runs] == [(16, 0), (16, 1), (16, 2), (64, 0), (64, 1), (64, 2)]
    for run_id in ("pobga_T16_seed2", "pobga_T64_seed0"):
        assert (serial / f"{run_id}.csv").read_bytes() == (parallel / f"{run_id}.csv").read_bytes()


def test_zero_threads_rejected(tmp_path):
    config = _write_config(tmp_path, _base())
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "out"), "--threads", "0"]) == EXIT_ERROR


def test_comparator_dominance_failure_exits_nonzero(tmp_path, monkeypatch):
    monkeypatch.setattr("ocsm_lab.harness.check_dominance", lambda record, functions, value: False)
    config = _write_config(tmp_path, _base())
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_VIOLATION
    (run,) = json.loads((out / "summary.json").read_text())["runs"]
    assert run["verdicts"]["comparator_dominance"] is False


def test_explicit_reward_instance(tmp_path):
    adversary = {"instance": {"family": "linear", "g": [1.0, 0.5]}, "sigma": 0.0}
    config = _write_config(tmp_path, _base(algorithm="obga", adversary=adversary, params={"mode": "manual", "eta": 0.5}))
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_OK
    (run,) = json.loads((out / "summary.json").read_text())["runs"]
    assert run["comparator_value"] == pytest.approx(64.0)
    assert run["verdicts"] == {"comparator_dominance": True}
