"""
Tests for run records and their CSV/JSON output.

Run with:
  pytest ocsm_lab/test_records.py
"""
import csv
import json

import numpy as np

from ocsm_lab.records import CSV_FIELDS, TraceBuilder, write_csv, write_json


def _record(node=None):
    trace = TraceBuilder(T=4, K=2, dim=2)
    trace.block_decisions[1] = [0.5, 0.25]
    for t in range(4):
        trace.counters.grad_evals += 1
        trace.play(t, 0.5 * t)
        if t % 2 == 1:
            trace.counters.lo_steps += 3
    return trace.build("pobga", seed=2, node=node, eta=0.1, history=[1.0, 2.0])


def test_record_views():
    record = _record()
    assert record.run_id == "pobga_T4_seed2"
    assert _record(node=3).run_id == "pobga_T4_seed2_node3"
    np.testing.assert_array_equal(record.blocks, [0, 0, 1, 1])
    np.testing.assert_array_equal(record.decisions[2], [0.5, 0.25])
    np.testing.assert_array_equal(record.cum_rewards, [0.0, 0.5, 1.5, 3.0])
    np.testing.assert_array_equal(record.cum_lo_steps, [0, 0, 3, 3])


def test_same_trajectory_ignores_communication():
    a, b = _record(), _record(node=0)
    b.counters.comms = 5
    b.algorithm = "dpobga"
    assert a.same_trajectory(b)
    b.rewards[0] = 1.0
    assert not a.same_trajectory(b)


def test_csv_schema(tmp_path):
    record = _record()
    record.alpha_regret = np.arange(4, dtype=float)
    path = write_csv([record, _record(node=1)], tmp_path / "nested" / "runs.csv")
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
    assert reader.fieldnames == CSV_FIELDS
    assert len(rows) == 8
    assert rows[2]["block"] == "2"
    assert rows[3]["lo_steps"] == "3"
    assert rows[3]["alpha_regret"] == "3.0"
    assert rows[4]["alpha_regret"] == ""


def test_summary_drops_array_extras(tmp_path):
    summary = _record().summary()
    assert summary["eta"] == 0.1
    assert "history" not in summary
    assert summary["counters"]["lo_steps"] == 6
    path = write_json({"runs": [summary]}, tmp_path / "summary.json")
    assert json.loads(path.read_text())["runs"][0]["total_reward"] == 3.0
