"""
Tests for POBGA and the projection-based baselines.

Run with:
  pytest ocsm_lab/test_algorithms.py
"""
import math

import numpy as np
import pytest

from ocsm_lab.algorithms import (
    PobgaParams,
    block_rng,
    obga_run,
    oga_run,
    pobga_params_from_theorem,
    pobga_regret_bound,
    pobga_run,
)
from ocsm_lab.core.functions import BOOST_SCALE, LinearReward, NoiseModel, ZeroReward
from ocsm_lab.core.sets import Box, BudgetedSimplex
from ocsm_lab.harness import Adversary


def _quadratic_adversary(decision_set, seed=3):
    return Adversary("quadratic", decision_set, sigma=0.1, seed=seed)


def test_params_validation():
    with pytest.raises(ValueError, match="divide"):
        PobgaParams(T=10, K=3, eta=0.1, eps=0.1)
    with pytest.raises(ValueError):
        PobgaParams(T=16, K=4, eta=0.0, eps=0.1)
    assert PobgaParams(T=16, K=4, eta=0.1, eps=0.1).num_blocks == 4


def test_theorem_params():
    params = pobga_params_from_theorem(256, 1.0, 1.0)
    assert params.K == 16
    assert params.eta == pytest.approx(20.0 / BOOST_SCALE / 64.0)
    assert params.eps == pytest.approx(405.0 / 16.0)
    with pytest.raises(ValueError, match="perfect square"):
        pobga_params_from_theorem(1000, 1.0, 1.0)


def test_regret_bound_value():
    assert pobga_regret_bound(256, 1.0, 2.0) == pytest.approx(45 * BOOST_SCALE * 2.0 * 64.0)


def test_zero_rewards_stay_at_origin():
    simplex = BudgetedSimplex(1.0, 2)
    record = pobga_run([ZeroReward(2)] * 64, simplex, pobga_params_from_theorem(64, 1.0, 1.0), seed=0)
    assert np.all(record.block_decisions == 0.0)
    assert np.all(record.rewards == 0.0)
    assert record.counters.lo_steps == 0
    assert record.counters.oip_calls == 8
    assert record.counters.oip_outer_iterations == 0


def test_single_block_calls_oracle_once():
    box = Box([1.0, 1.0])
    f = LinearReward([1.0, 1.0])
    record = pobga_run([f] * 16, box, PobgaParams(T=16, K=16, eta=0.1, eps=0.01), seed=0)
    assert record.counters.oip_calls == 1
    assert np.all(record.decisions == 0.0)


def test_theorem_run_budgets_and_invariants():
    simplex = BudgetedSimplex(1.0, 2)
    adversary = _quadratic_adversary(simplex)
    bound = adversary.bound(256, simplex)
    params = pobga_params_from_theorem(256, simplex.radius, bound.G)
    record = pobga_run(adversary, simplex, params, seed=1, G=bound.G)
    assert record.counters.lo_steps <= 256
    assert record.counters.grad_evals == 256
    assert record.counters.oip_calls == 16
    assert record.counters.comms == 0
    assert all(simplex.contains(x) for x in record.block_decisions)
    assert record.rewards.shape == (256,)


def test_decisions_change_only_between_blocks():
    box = Box([1.0, 1.0])
    f = LinearReward([1.0, 0.5], NoiseModel(0.1))
    params = PobgaParams(T=64, K=8, eta=0.05, eps=0.001)
    record = pobga_run([f] * 64, box, params, seed=2, G=f.gradient_bound(box.radius).G)
    decisions = record.decisions
    for m in range(8):
        assert np.all(decisions[m * 8:(m + 1) * 8] == record.block_decisions[m])
    assert record.counters.lo_steps > 0
    assert 0 < record.counters.oip_outer_iterations <= record.counters.lo_steps
    assert record.block_decisions[-1].sum() > 0


def test_run_is_reproducible():
    simplex = BudgetedSimplex(1.0, 2)
    params = pobga_params_from_theorem(64, 1.0, 3.0)
    first = pobga_run(_quadratic_adversary(simplex), simplex, params, seed=5)
    second = pobga_run(_quadratic_adversary(simplex), simplex, params, seed=5)
    other = pobga_run(_quadratic_adversary(simplex), simplex, PobgaParams(64, 8, 0.05, 0.001), seed=6)
    assert first.same_trajectory(second)
    assert not first.same_trajectory(other)


def test_block_streams_are_independent_of_order():
    a = block_rng(7, 0, 3).random(4)
    block_rng(7, 1, 3).random(10)
    b = block_rng(7, 0, 3).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, block_rng(7, 0, 4).random(4))


def test_baselines_project_every_round():
    box = Box([1.0, 1.0])
    f = LinearReward([1.0, 1.0])
    for run in (oga_run, obga_run):
        record = run([f] * 20, box, 0.5, 20, seed=0)
        assert record.counters.projections == 20
        assert record.counters.grad_evals == 20
        assert record.K == 1
        np.testing.assert_allclose(record.block_decisions[-1], [1.0, 1.0])


def test_oga_step_matches_manual_update():
    box = Box([1.0, 1.0])
    f = LinearReward([0.2, 0.4])
    record = oga_run([f] * 3, box, 0.5, 3, seed=0)
    np.testing.assert_allclose(record.block_decisions[1], [0.1, 0.2])
    np.testing.assert_allclose(record.block_decisions[2], [0.2, 0.4])
    boosted = obga_run([f] * 3, box, 0.5, 3, seed=0)
    np.testing.assert_allclose(boosted.block_decisions[1], 0.5 * BOOST_SCALE * f.g)
    assert boosted.rewards[0] == 0.0
    assert math.isclose(boosted.rewards[1], f.value(boosted.block_decisions[1]))
