"""
Property suites behind the verify command

Each suite draws its instances from one seeded stream and returns a list of
PropertyResult; the rendered report depends only on the configuration and
the seed.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .core.functions import (
    BOOST_SCALE,
    CoverageReward,
    LinearReward,
    NoiseModel,
    QuadraticReward,
    RewardFunction,
    boost_grad_quadrature,
    boost_z_from_uniform,
    boosted_stochastic_grad,
)
from .core.config import get_settings
from .core.infeasible_projection import IPResult, OracleBudgetError, lo_budget, o_ip
from .core.sets import Box, BudgetedSimplex, DecisionSet, NonnegBall
from .decentralized import Network, TOPOLOGIES, WEIGHT_SCHEMES
from .experiment_config import VerifySpec

logger = logging.getLogger(__name__)

Oracle = Callable[[DecisionSet, np.ndarray, np.ndarray, float], IPResult]

TOL = 1e-9
SUITES = ("oracle", "unbiasedness", "boosting", "weights", "gradients")

# Three rewards per dimension, so about 100 interior points each
_POINTS_PER_FUNCTION = 34


@dataclass
class PropertyResult:
    """Outcome of one property over all of its checked cases"""
    suite: str
    name: str
    checked: int = 0
    failures: int = 0
    worst: float = 0.0                 # largest violation margin seen (0 when every case passes)
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, ok: bool, margin: float = 0.0, detail: str = "") -> None:
        self.checked += 1
        if not ok:
            self.failures += 1
            self.worst = max(self.worst, float(margin))
            if not self.detail:
                self.detail = detail

    def as_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["passed"] = self.passed
        return payload


def _suite_sets(rng: np.random.Generator) -> List[DecisionSet]:
    """One instance of every set kind in dimensions 2 to 4."""
    sets: List[DecisionSet] = []
    for dim in (2, 3, 4):
        sets.append(Box(rng.uniform(0.5, 1.5, dim)))
        sets.append(BudgetedSimplex(1.0, dim))
        sets.append(BudgetedSimplex(float(rng.uniform(0.5, 1.5)), dim, rng.uniform(0.3, 1.0, dim)))
        sets.append(NonnegBall(float(rng.uniform(0.5, 1.5)), dim))
    return sets


def _random_reward(rng: np.random.Generator, decision_set: DecisionSet, sigma: float) -> RewardFunction:
    """A monotone quadratic or (inside the unit box) coverage reward."""
    n = decision_set.dim
    upper = decision_set.upper
    noise = NoiseModel(sigma)
    if np.all(upper <= 1.0) and rng.random() < 0.5:
        return CoverageReward(rng.uniform(0.0, 1.0, 3), rng.integers(0, 4, (3, n)).astype(float), noise)
    B = -rng.uniform(0.0, 1.0, (n, n))
    H = (B + B.T) / 2.0
    return QuadraticReward(H, -H @ upper + rng.uniform(0.0, 1.0, n), noise)


def oracle_suite(spec: VerifySpec, rng: np.random.Generator, oracle: Oracle = o_ip) -> List[PropertyResult]:
    """
    Contract of the infeasible projection on randomized calls over every set kind.

    Args:
        spec: Sample sizes
        rng: Random stream
        oracle: Implementation under test

    Returns:
        Budget, feasibility, anchor-norm, closeness and Fejér results
    """
    budget = PropertyResult("oracle", "lo_budget")
    feasible = PropertyResult("oracle", "feasibility")
    anchor = PropertyResult("oracle", "anchor_norm")
    close = PropertyResult("oracle", "closeness")
    fejer = PropertyResult("oracle", "fejer")
    sets = _suite_sets(rng)

    for call in range(spec.oracle_calls):
        decision_set = sets[call % len(sets)]
        R = decision_set.radius
        x0 = decision_set.sample(rng, 1)[0]
        direction = rng.standard_normal(decision_set.dim)
        y0 = x0 + rng.uniform(0.0, 2.0 * R) * direction / np.linalg.norm(direction)
        eps = float(rng.uniform(0.02, 0.3)) * R * R
        try:
            result = oracle(decision_set, x0, y0, eps)
        except OracleBudgetError as e:
            budget.record(False, detail=str(e))
            continue

        dist_sq = float((x0 - y0) @ (x0 - y0))
        allowed = lo_budget(R, eps, dist_sq) if dist_sq > 3.0 * eps else 0
        budget.record(result.lo_steps <= allowed, result.lo_steps - allowed,
                      f"call {call}: {result.lo_steps} LMO calls, budget {allowed:.1f}")
        feasible.record(decision_set.contains(result.x, TOL), 0.0, f"call {call}: x is infeasible")
        excess = float(np.linalg.norm(result.y_tilde)) - R
        anchor.record(excess <= TOL, excess, f"call {call}: ‖ỹ‖ exceeds R by {excess:.3e}")
        gap = float((result.x - result.y_tilde) @ (result.x - result.y_tilde)) - 3.0 * eps
        close.record(gap <= TOL, gap, f"call {call}: ‖x − ỹ‖² exceeds 3ε by {gap:.3e}")

        points = list(decision_set.sample(rng, spec.fejer_points))
        points.extend(decision_set.vertices() or [])
        points = np.asarray(points)
        before = np.sum((y0 - points) ** 2, axis=1)
        after = np.sum((result.y_tilde - points) ** 2, axis=1)
        worst = float(np.max(after - before))
        fejer.record(worst <= TOL, worst, f"call {call}: ỹ moved away from a feasible point by {worst:.3e}")

    return [budget, feasible, anchor, close, fejer]


def unbiasedness_suite(spec: VerifySpec, rng: np.random.Generator) -> List[PropertyResult]:
    """Monte Carlo mean of boosted gradients against the quadrature gradient."""
    mean_check = PropertyResult("unbiasedness", "boosted_mean")
    norm_check = PropertyResult("unbiasedness", "boosted_norm")
    sets = _suite_sets(rng)
    for point in range(spec.mc_points):
        decision_set = sets[point % len(sets)]
        f = _random_reward(rng, decision_set, sigma=0.1)
        x = decision_set.sample(rng, 1)[0]
        limit = BOOST_SCALE * f.gradient_bound(decision_set.radius).G + 1e-12
        draws = np.empty((spec.mc_draws, f.dim))
        for k in range(spec.mc_draws):
            draws[k] = boosted_stochastic_grad(f, x, rng=rng)
        norms = np.linalg.norm(draws, axis=1)
        norm_check.record(bool(np.all(norms <= limit)), float(norms.max() - limit),
                          f"point {point}: boosted gradient norm {norms.max():.6g} above {limit:.6g}")

        expected = boost_grad_quadrature(f, x, get_settings().quadrature_nodes)
        standard_error = draws.std(axis=0, ddof=1) / math.sqrt(spec.mc_draws)
        deviation = np.abs(draws.mean(axis=0) - expected) - spec.mc_tolerance * standard_error
        worst = float(deviation.max())
        mean_check.record(worst <= 1e-12, worst,
                          f"point {point}: mean off by more than {spec.mc_tolerance} standard errors")
    return [mean_check, norm_check]


def boosting_suite(spec: VerifySpec, rng: np.random.Generator) -> List[PropertyResult]:
    """⟨y − x, ∇F(x)⟩ ≥ (1 − e^{-1}) f(y) − f(x) on random feasible pairs."""
    inequality = PropertyResult("boosting", "boosting_inequality")
    sets = _suite_sets(rng)
    for instance in range(spec.instances):
        decision_set = sets[instance % len(sets)]
        f = _random_reward(rng, decision_set, sigma=0.0)
        X = decision_set.sample(rng, spec.pairs)
        Y = decision_set.sample(rng, spec.pairs)
        f_x = f.eval_batch(X)
        f_y = f.eval_batch(Y)
        for x, y, fx, fy in zip(X, Y, f_x, f_y):
            lhs = float((y - x) @ boost_grad_quadrature(f, x, spec.quadrature_nodes))
            shortfall = BOOST_SCALE * fy - fx - lhs
            inequality.record(shortfall <= 1e-8, shortfall,
                              f"instance {instance}: inequality short by {shortfall:.3e}")
    return [inequality]


def weights_suite(spec: VerifySpec, rng: np.random.Generator) -> List[PropertyResult]:
    """Weight-matrix conditions on every topology and scheme, plus the cycle-4 spectrum."""
    conditions = PropertyResult("weights", "weight_matrix")
    cycle = PropertyResult("weights", "cycle4_beta")
    sizes = {"complete": (2, 3, 5, 8), "cycle": (3, 4, 6, 9), "star": (2, 4, 7), "grid": (4, 9, 16), "path": (2, 5, 8)}
    for kind in TOPOLOGIES:
        for N in sizes[kind]:
            for scheme in WEIGHT_SCHEMES:
                try:
                    Network.from_topology(kind, N, scheme)
                    conditions.record(True)
                except ValueError as e:
                    conditions.record(False, detail=f"{kind} N={N} {scheme}: {e}")
    beta = Network.from_topology("cycle", 4).beta
    cycle.record(abs(beta - 1.0 / 3.0) <= 1e-10, abs(beta - 1.0 / 3.0), f"cycle-4 β = {beta!r}")
    return [conditions, cycle]


def gradients_suite(spec: VerifySpec, rng: np.random.Generator) -> List[PropertyResult]:
    """Finite-difference gradients, the DR property and the boosting inverse-CDF endpoints."""
    finite_difference = PropertyResult("gradients", "finite_difference")
    diminishing = PropertyResult("gradients", "dr_antitone")
    endpoints = PropertyResult("gradients", "inverse_cdf_endpoints")
    step = 1e-5
    for dim in (2, 3, 4):
        box = Box(np.ones(dim))
        for f in (_random_reward(rng, box, 0.0), _random_reward(rng, box, 0.0), LinearReward(rng.uniform(0, 1, dim))):
            for _ in range(_POINTS_PER_FUNCTION):
                x = rng.uniform(0.05, 0.95, dim)
                estimate = np.array([
                    (f.value(x + step * e) - f.value(x - step * e)) / (2.0 * step) for e in np.eye(dim)
                ])
                exact = f.gradient(x)
                error = float(np.linalg.norm(estimate - exact)) / max(1.0, float(np.linalg.norm(exact)))
                finite_difference.record(error <= 1e-5, error, f"{f.family} dim {dim}: relative error {error:.3e}")
            if isinstance(f, QuadraticReward):
                for _ in range(_POINTS_PER_FUNCTION):
                    x = rng.uniform(0.0, 1.0, dim)
                    y = x + rng.uniform(0.0, 1.0, dim) * (1.0 - x)
                    rise = float(np.max(f.gradient(y) - f.gradient(x)))
                    diminishing.record(rise <= 1e-12, rise, f"dim {dim}: gradient grew by {rise:.3e}")
    endpoints.record(boost_z_from_uniform(0.0) == 0.0, 1.0, "z(0) is not exactly 0")
    endpoints.record(boost_z_from_uniform(1.0) == 1.0, 1.0, "z(1) is not exactly 1")
    return [finite_difference, diminishing, endpoints]


_SUITE_RUNNERS = {
    "unbiasedness": unbiasedness_suite,
    "boosting": boosting_suite,
    "weights": weights_suite,
    "gradients": gradients_suite,
}


def run_suites(spec: VerifySpec, seed: int, oracle: Optional[Oracle] = None) -> List[PropertyResult]:
    """
    Run the selected suites, each on its own stream derived from the seed.

    Args:
        spec: Suite selection and sample sizes
        seed: Master seed
        oracle: Infeasible projection implementation for the oracle suite

    Returns:
        Results in suite order
    """
    results: List[PropertyResult] = []
    for index, name in enumerate(SUITES):
        if name not in spec.suites:
            continue
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
        logger.info(f"Running {name} suite")
        if name == "oracle":
            results.extend(oracle_suite(spec, rng, oracle or o_ip))
        else:
            results.extend(_SUITE_RUNNERS[name](spec, rng))
    return results


def render_report(results: Sequence[PropertyResult]) -> str:
    """Plain-text report, one line per property."""
    lines = []
    for r in results:
        mark = "✅" if r.passed else "❌"
        line = f"{mark} {r.suite}.{r.name}: {r.checked - r.failures}/{r.checked} passed"
        if not r.passed:
            line += f" (worst margin {r.worst:.3e}; first failure: {r.detail})"
        lines.append(line)
    failed = sum(1 for r in results if not r.passed)
    lines.append(f"📊 {len(results) - failed}/{len(results)} properties passed")
    return "\n".join(lines) + "\n"
