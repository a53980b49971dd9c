"""
Tests for the separating-hyperplane Frank-Wolfe routine and the infeasible projection.

Run with:
  pytest ocsm_lab/core/test_infeasible_projection.py
"""
import math

import numpy as np
import pytest

from ocsm_lab.core.infeasible_projection import (
    LoCounter,
    StopReason,
    lo_budget,
    o_ip,
    outer_iteration_bound,
    shfw,
    shfw_step_bound,
)
from ocsm_lab.core.sets import Box, BudgetedSimplex, NonnegBall


def _sets():
    return [Box([1.0, 0.7]), BudgetedSimplex(1.0, 2), BudgetedSimplex(1.2, 3, [1.0, 0.5, 0.9]), NonnegBall(1.0, 3)]


def test_shfw_target_inside_costs_one_step():
    simplex = BudgetedSimplex(1.0, 2)
    x = np.array([0.2, 0.3])
    outcome = shfw(simplex, x, x, 0.01)
    assert outcome.reason is StopReason.CLOSE
    assert outcome.lo_steps == 1
    np.testing.assert_array_equal(outcome.x_tilde, x)


def test_shfw_separates_far_target():
    box = Box([1.0, 1.0])
    counter = LoCounter()
    outcome = shfw(box, np.zeros(2), np.array([5.0, 5.0]), 0.01, counter)
    assert outcome.reason is StopReason.SEPARATING
    assert counter.steps == outcome.lo_steps
    np.testing.assert_allclose(outcome.x_tilde, [1.0, 1.0])


def test_shfw_step_bound():
    rng = np.random.default_rng(0)
    for decision_set in _sets():
        R = decision_set.radius
        for _ in range(50):
            eps = rng.uniform(0.01, 0.2) * R * R
            x = decision_set.sample(rng, 1)[0]
            y = rng.uniform(-1.0, 2.0, decision_set.dim)
            outcome = shfw(decision_set, x, y, eps)
            assert outcome.lo_steps <= shfw_step_bound(R, eps)
            assert decision_set.contains(outcome.x_tilde)


def test_shfw_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        shfw(Box([1.0]), np.zeros(1), np.ones(1), 0.0)


def test_o_ip_early_return_when_close():
    simplex = BudgetedSimplex(1.0, 2)
    x0 = np.array([0.2, 0.3])
    result = o_ip(simplex, x0, x0 + 0.01, 0.01)
    assert result.lo_steps == 0
    np.testing.assert_array_equal(result.x, x0)
    np.testing.assert_allclose(result.y_tilde, x0 + 0.01)


def test_o_ip_scales_anchor_into_ball():
    ball = NonnegBall(1.0, 2)
    result = o_ip(ball, np.zeros(2), np.array([3.0, 4.0]), 0.01)
    assert np.linalg.norm(result.y_tilde) <= 1.0 + 1e-9
    assert ball.contains(result.x)


def test_o_ip_contract():
    rng = np.random.default_rng(1)
    for decision_set in _sets():
        R = decision_set.radius
        witnesses = decision_set.sample(rng, 100)
        if decision_set.vertices():
            witnesses = np.vstack([witnesses, *decision_set.vertices()])
        for _ in range(60):
            eps = rng.uniform(0.02, 0.3) * R * R
            x0 = decision_set.sample(rng, 1)[0]
            direction = rng.standard_normal(decision_set.dim)
            y0 = x0 + rng.uniform(0.0, 2.0 * R) * direction / np.linalg.norm(direction)
            trace = []
            result = o_ip(decision_set, x0, y0, eps, trace=trace)

            assert decision_set.contains(result.x, 1e-9)
            assert np.linalg.norm(result.y_tilde) <= R + 1e-9
            assert (result.x - result.y_tilde) @ (result.x - result.y_tilde) <= 3 * eps + 1e-9
            before = np.sum((y0 - witnesses) ** 2, axis=1)
            after = np.sum((result.y_tilde - witnesses) ** 2, axis=1)
            assert np.all(after <= before + 1e-9)

            dist_sq = float((x0 - y0) @ (x0 - y0))
            if dist_sq > 3 * eps:
                assert result.lo_steps <= lo_budget(R, eps, dist_sq)
            np.testing.assert_array_equal(trace[-1], result.y_tilde)


def test_o_ip_target_sequence_is_fejer():
    box = Box([1.0, 1.0])
    z = np.array([0.5, 0.5])
    trace = []
    o_ip(box, np.zeros(2), np.array([1.4, -0.6]), 0.005, trace=trace)
    distances = [np.linalg.norm(y - z) for y in trace]
    assert all(later <= earlier + 1e-12 for earlier, later in zip(distances, distances[1:]))


def test_budget_formulas():
    assert shfw_step_bound(1.0, 27.0) == 1
    assert shfw_step_bound(1.0, 1.0) == 25
    assert outer_iteration_bound(0.1, 1.0) == 1.0
    assert outer_iteration_bound(3.0, 1.0) == pytest.approx(3.0 * 2.0 / 4.0 + 1.0)
    assert lo_budget(1.0, 1.0, 3.0) == pytest.approx(25 * 2.5)
    assert shfw_step_bound(2.0, 0.3) == math.ceil(27 * 4 / 0.3 - 2)


def test_shfw_box_corner_target():
    outcome = shfw(Box([1.0, 1.0]), np.zeros(2), np.array([-1.0, -1.0]), 1.0)
    assert outcome.reason in (StopReason.CLOSE, StopReason.SEPARATING)
    assert outcome.lo_steps == 1
    np.testing.assert_array_equal(outcome.x_tilde, [0.0, 0.0])


def test_shfw_separating_hyperplane():
    rng = np.random.default_rng(2)
    separating = 0
    for decision_set in _sets():
        R = decision_set.radius
        witnesses = decision_set.sample(rng, 100)
        if decision_set.vertices():
            witnesses = np.vstack([witnesses, *decision_set.vertices()])
        for _ in range(80):
            eps = rng.uniform(0.005, 0.1) * R * R
            x = decision_set.sample(rng, 1)[0]
            y = rng.uniform(-1.0, 2.5, decision_set.dim) * R
            outcome = shfw(decision_set, x, y, eps)
            gap = outcome.x_tilde - y
            if outcome.reason is StopReason.SEPARATING and gap @ gap > 3 * eps:
                separating += 1
                assert np.all((witnesses - outcome.x_tilde) @ (y - outcome.x_tilde) <= eps + 1e-9)
    assert separating > 0


def test_o_ip_simplex_far_target():
    simplex = BudgetedSimplex(1.0, 2)
    y0 = np.array([2.0, 2.0])
    result = o_ip(simplex, np.zeros(2), y0, 0.05)

    assert simplex.contains(result.x, 1e-9)
    assert (result.x - result.y_tilde) @ (result.x - result.y_tilde) <= 0.15 + 1e-12
    assert np.linalg.norm(result.y_tilde) <= 1.0 + 1e-9
    assert 1 <= result.lo_steps <= lo_budget(1.0, 0.05, 8.0)
    for z in ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5]):
        z = np.array(z)
        assert (result.y_tilde - z) @ (result.y_tilde - z) <= (y0 - z) @ (y0 - z) + 1e-9

    again = o_ip(simplex, np.zeros(2), y0, 0.05)
    np.testing.assert_array_equal(again.x, result.x)
    np.testing.assert_array_equal(again.y_tilde, result.y_tilde)
    assert again.lo_steps == result.lo_steps
    assert result.outer_iterations >= 1
