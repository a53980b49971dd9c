"""
Online learners: projection-free boosting gradient ascent and its baselines

pobga_run holds its decision fixed for blocks of K rounds, accumulates
boosted stochastic gradients on an infeasible anchor, and calls the
infeasible projection oracle once per block. oga_run and obga_run are the
projection-based baselines that project after every round.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core.functions import BOOST_SCALE, RewardFunction, boosted_stochastic_grad, stochastic_grad
from .core.infeasible_projection import o_ip
from .core.sets import DecisionSet
from .records import RunRecord, TraceBuilder

logger = logging.getLogger(__name__)

# Rounds are indexed from 0; a source is either a list of rewards or a callable t -> f_t
RewardSource = Union[Sequence[RewardFunction], Callable[[int], RewardFunction]]

# Slack added to every certified bound checked during instrumented runs
BOUND_SLACK = 1e-9


class InvariantViolation(AssertionError):
    """A bound certified by the analysis failed during an instrumented run"""


@dataclass(frozen=True)
class PobgaParams:
    """Horizon, block size, step size and oracle tolerance"""
    T: int
    K: int
    eta: float
    eps: float

    def __post_init__(self):
        if self.T < 1 or self.K < 1:
            raise ValueError(f"horizon and block size must be positive, got T={self.T}, K={self.K}")
        if self.T % self.K != 0:
            raise ValueError(f"block size K={self.K} must divide the horizon T={self.T}")
        if not self.eta > 0 or not self.eps > 0:
            raise ValueError(f"step size and tolerance must be positive, got eta={self.eta}, eps={self.eps}")

    @property
    def num_blocks(self) -> int:
        return self.T // self.K


def pobga_params_from_theorem(
    T: int,
    R: float,
    G: float,
    eta_scale: float = 1.0,
    eps_scale: float = 1.0
) -> PobgaParams:
    """
    Parameters that certify the T^{3/4} regret and the T linear-optimisation budget.

    η = 20R/((1 − 1/e)G) · T^{-3/4}, ε = 405R² · T^{-1/2}, K = √T. The scale
    factors keep the rates in T and change only the constants.

    Args:
        T: Horizon, a perfect square
        R: Radius of the decision set
        G: Bound on stochastic gradient norms
        eta_scale: Multiplier on η
        eps_scale: Multiplier on ε

    Returns:
        PobgaParams
    """
    K = math.isqrt(T) if T > 0 else 0
    if K * K != T or T < 1:
        raise ValueError(f"T must be a perfect square for theorem parameters, got T={T}")
    if not R > 0 or not G > 0:
        raise ValueError(f"theorem parameters need positive R and G, got R={R}, G={G}")
    if not eta_scale > 0 or not eps_scale > 0:
        raise ValueError(f"scale factors must be positive, got eta_scale={eta_scale}, eps_scale={eps_scale}")
    eta = eta_scale * 20.0 * R / (BOOST_SCALE * G) * T ** -0.75
    eps = eps_scale * 405.0 * R * R / math.sqrt(T)
    return PobgaParams(T=T, K=K, eta=eta, eps=eps)


def pobga_regret_bound(T: int, R: float, G: float) -> float:
    """45(1 − e^{-1}) R G T^{3/4}."""
    return 45.0 * BOOST_SCALE * R * G * T ** 0.75


def block_rng(seed: int, node: int, block: int) -> np.random.Generator:
    """
    Random stream owned by one node for one block.

    The stream depends only on (seed, node, block), so runs are reproducible
    regardless of execution order, and a single learner (node 0) matches the
    one-node decentralized run draw for draw.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(node, block)))


def reward_at(source: RewardSource, t: int) -> RewardFunction:
    """Reward revealed in round t (0-based)."""
    if callable(source):
        return source(t)
    return source[t]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvariantViolation(message)


def check_oracle_output(decision_set: DecisionSet, x: np.ndarray, y_tilde: np.ndarray, eps: float, where: str) -> None:
    """Feasibility, anchor norm and closeness of an infeasible projection output."""
    _require(decision_set.contains(x, BOUND_SLACK), f"{where}: decision left the feasible set")
    _require(
        float(np.linalg.norm(y_tilde)) <= decision_set.radius + BOUND_SLACK,
        f"{where}: anchor norm {np.linalg.norm(y_tilde):.6g} exceeds R={decision_set.radius:.6g}",
    )
    gap = float((x - y_tilde) @ (x - y_tilde))
    _require(gap <= 3.0 * eps + BOUND_SLACK, f"{where}: ‖x − ỹ‖² = {gap:.6g} exceeds 3ε = {3 * eps:.6g}")


def block_drift_bound(params: PobgaParams, G: float) -> float:
    """6ε + 2(1 − e^{-1})²K²η²G², the bound on ‖y_{m+1} − x_m‖²."""
    return 6.0 * params.eps + 2.0 * (BOOST_SCALE * params.K * params.eta * G) ** 2


def pobga_run(
    adversary: RewardSource,
    decision_set: DecisionSet,
    params: PobgaParams,
    seed: int,
    G: Optional[float] = None,
    instrument: bool = True,
    node: int = 0
) -> RunRecord:
    """
    Projection-free online boosting gradient ascent.

    Args:
        adversary: Reward source for rounds 0..T-1
        decision_set: Feasible set containing the origin
        params: Horizon, block size, step size and tolerance
        seed: Master seed; block m draws from block_rng(seed, node, m)
        G: Gradient bound; enables the per-block drift check when given
        instrument: Check the oracle output invariants after every block
        node: Stream id (0 for a single learner)

    Returns:
        RunRecord of the played decisions, exact rewards and counters
    """
    dim = decision_set.dim
    trace = TraceBuilder(params.T, params.K, dim)
    counters = trace.counters
    x = np.zeros(dim)
    y_tilde = np.zeros(dim)
    max_gap = 0.0

    for m in range(params.num_blocks):
        rng = block_rng(seed, node, m)
        trace.block_decisions[m] = x
        accumulated = np.zeros(dim)
        for t in range(m * params.K, (m + 1) * params.K):
            f = reward_at(adversary, t)
            trace.play(t, f.value(x))
            accumulated += boosted_stochastic_grad(f, x, rng=rng)
            counters.grad_evals += 1

        y_next = y_tilde + params.eta * accumulated
        if instrument and G is not None:
            drift = float((y_next - x) @ (y_next - x))
            bound = block_drift_bound(params, G)
            _require(drift <= bound + BOUND_SLACK, f"block {m + 1}: ‖y − x‖² = {drift:.6g} exceeds {bound:.6g}")

        result = o_ip(decision_set, x, y_next, params.eps)
        counters.lo_steps += result.lo_steps
        counters.oip_calls += 1
        counters.oip_outer_iterations += result.outer_iterations
        x, y_tilde = result.x, result.y_tilde
        if instrument:
            check_oracle_output(decision_set, x, y_tilde, params.eps, f"block {m + 1}")
        max_gap = max(max_gap, float((x - y_tilde) @ (x - y_tilde)))

    logger.debug(
        f"pobga finished: T={params.T}, K={params.K}, lo_steps={counters.lo_steps}, "
        f"oip_calls={counters.oip_calls}"
    )
    return trace.build("pobga", seed, eta=params.eta, eps=params.eps, max_closeness=max_gap)


def _projected_run(
    name: str,
    adversary: RewardSource,
    decision_set: DecisionSet,
    eta: float,
    T: int,
    seed: int,
    boosted: bool
) -> RunRecord:
    if not eta > 0:
        raise ValueError(f"step size must be positive, got {eta}")
    dim = decision_set.dim
    trace = TraceBuilder(T, 1, dim)
    counters = trace.counters
    x = np.zeros(dim)

    for t in range(T):
        rng = block_rng(seed, 0, t)
        f = reward_at(adversary, t)
        trace.block_decisions[t] = x
        trace.play(t, f.value(x))
        if boosted:
            step = boosted_stochastic_grad(f, x, rng=rng)
        else:
            step = stochastic_grad(f, x, rng=rng)
        counters.grad_evals += 1
        x = decision_set.project(x + eta * step)
        counters.projections += 1

    return trace.build(name, seed, eta=eta)


def oga_run(adversary: RewardSource, decision_set: DecisionSet, eta: float, T: int, seed: int) -> RunRecord:
    """
    Online gradient ascent: x_{t+1} = Π_K[x_t + η ∇̃f_t(x_t)], from x_1 = 0.

    Args:
        adversary: Reward source
        decision_set: Feasible set
        eta: Step size
        T: Horizon
        seed: Master seed; round t draws from block_rng(seed, 0, t)

    Returns:
        RunRecord with one block per round
    """
    return _projected_run("oga", adversary, decision_set, eta, T, seed, boosted=False)


def obga_run(adversary: RewardSource, decision_set: DecisionSet, eta: float, T: int, seed: int) -> RunRecord:
    """Online boosting gradient ascent: OGA with the boosted stochastic gradient."""
    return _projected_run("obga", adversary, decision_set, eta, T, seed, boosted=True)
