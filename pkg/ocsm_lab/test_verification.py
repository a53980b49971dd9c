"""
Tests for the property suites.

Run with:
  pytest ocsm_lab/test_verification.py
"""
import numpy as np

from ocsm_lab.core.infeasible_projection import IPResult, o_ip
from ocsm_lab.experiment_config import VerifySpec
from ocsm_lab.verification import PropertyResult, oracle_suite, render_report, run_suites, weights_suite

SMALL = VerifySpec(
    oracle_calls=24,
    fejer_points=10,
    mc_draws=2000,
    mc_points=2,
    mc_tolerance=5.0,
    pairs=20,
    instances=2,
    quadrature_nodes=64,
)


def _drifting_oracle(decision_set, x0, y0, eps):
    """Returns the right decision but moves the anchor far outside the set."""
    result = o_ip(decision_set, x0, y0, eps)
    away = -np.ones(decision_set.dim) / np.sqrt(decision_set.dim)
    return IPResult(result.x, y0 + 20.0 * decision_set.radius * away, result.lo_steps)


def test_oracle_suite_passes_for_o_ip():
    results = oracle_suite(SMALL, np.random.default_rng(0))
    assert [r.name for r in results] == ["lo_budget", "feasibility", "anchor_norm", "closeness", "fejer"]
    assert all(r.passed and r.checked == 24 for r in results)


def test_drifting_oracle_fails_fejer():
    results = {r.name: r for r in oracle_suite(SMALL, np.random.default_rng(0), oracle=_drifting_oracle)}
    assert not results["fejer"].passed
    assert results["fejer"].failures == 24
    assert results["fejer"].worst > 0
    assert results["feasibility"].passed


def test_weights_suite():
    conditions, cycle = weights_suite(SMALL, np.random.default_rng(0))
    assert conditions.passed and conditions.checked > 0
    assert cycle.passed


def test_suite_selection_and_report():
    spec = SMALL.model_copy(update={"suites": ["weights", "gradients"]})
    results = run_suites(spec, seed=1)
    assert {r.suite for r in results} == {"weights", "gradients"}
    assert all(r.passed for r in results)

    report = render_report(results)
    assert report.endswith(f"📊 {len(results)}/{len(results)} properties passed\n")
    assert report == render_report(run_suites(spec, seed=1))


def test_full_suites_pass_with_small_sizes():
    results = run_suites(SMALL, seed=0)
    failed = [r.as_dict() for r in results if not r.passed]
    assert not failed


def test_failed_property_rendering():
    result = PropertyResult("oracle", "fejer")
    result.record(True)
    result.record(False, 0.5, "call 1: moved away")
    result.record(False, 0.25, "call 2: moved away")
    assert result.checked == 3 and result.failures == 2
    assert result.worst == 0.5
    line = render_report([result]).splitlines()[0]
    assert line.startswith("❌ oracle.fejer: 1/3 passed")
    assert "call 1" in line
