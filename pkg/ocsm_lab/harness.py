"""
Experiment harness: adversaries, the grid-search comparator, α-regret and
regret-slope estimation, plus the glue that turns an ExperimentConfig into
run records.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .algorithms import (
    PobgaParams,
    RewardSource,
    obga_run,
    oga_run,
    pobga_params_from_theorem,
    pobga_run,
    reward_at,
)
from .core.functions import (
    BOOST_SCALE,
    CoverageReward,
    GradientBound,
    LinearReward,
    NoiseModel,
    QuadraticReward,
    RewardFunction,
    ZeroReward,
    aggregate,
    average,
    reward_from_dict,
)
from .core.sets import DecisionSet, set_from_dict
from .decentralized import Network, dpobga_run
from .experiment_config import ExperimentConfig, SetSpec
from .records import RunRecord

logger = logging.getLogger(__name__)

# Largest dimension the grid-search comparator accepts
MAX_GRID_DIM = 4

# Relative slack of the comparator-dominance check
DOMINANCE_SLACK = 1e-2


class Adversary:
    """
    Round-indexed reward source f_t for one node.

    Instances are drawn from the adversary's own seed, never from a learner's
    streams. In iid mode every round gets a fresh instance; in fixed mode
    round 0's instance is replayed. An explicit instance is replayed every
    round.
    """

    def __init__(
        self,
        family: str,
        decision_set: DecisionSet,
        sigma: float = 0.1,
        seed: int = 0,
        mode: str = "iid",
        node: int = 0,
        run_seed: int = 0,
        h_scale: float = 1.0,
        H_scale: float = 1.0,
        rows: int = 4,
        max_exponent: int = 3,
        instance: Optional[RewardFunction] = None
    ):
        if instance is not None:
            family, mode, sigma = instance.family, "fixed", instance.noise.sigma
        if family not in ("quadratic", "coverage", "linear", "zero"):
            raise ValueError(f"Unknown adversary family: {family!r}")
        if mode not in ("iid", "fixed"):
            raise ValueError(f"Unknown adversary mode: {mode!r} (expected iid or fixed)")
        self.family = family
        self.dim = decision_set.dim
        self.upper = decision_set.upper
        self.noise = NoiseModel(sigma)
        self.seed = seed
        self.mode = mode
        self.node = node
        self.run_seed = run_seed
        self.h_scale = h_scale
        self.H_scale = H_scale
        self.rows = rows
        self.max_exponent = max_exponent
        self._cache: Dict[int, RewardFunction] = {}

        if instance is not None:
            if instance.dim != self.dim:
                raise ValueError(f"reward instance has dimension {instance.dim}, the decision set {self.dim}")
            if not instance.check_monotone(self.upper):
                raise ValueError(f"the {family} reward instance is not monotone on the set")
            self._cache[0] = instance

        if family == "coverage" and np.any(self.upper > 1.0):
            raise ValueError("coverage rewards need a decision set inside the unit box")

    def _rng(self, t: int) -> np.random.Generator:
        round_key = t if self.mode == "iid" else 0
        return np.random.default_rng(
            np.random.SeedSequence([self.seed, self.run_seed], spawn_key=(self.node, round_key))
        )

    def _generate(self, rng: np.random.Generator) -> RewardFunction:
        n = self.dim
        if self.family == "zero":
            return ZeroReward(n, self.noise)
        if self.family == "linear":
            return LinearReward(rng.uniform(0.0, self.h_scale, n), self.noise)
        if self.family == "quadratic":
            B = -rng.uniform(0.0, self.H_scale, (n, n))
            H = (B + B.T) / 2.0
            # h ≥ −H·u keeps the gradient nonnegative on the whole set
            h = -H @ self.upper + rng.uniform(0.0, self.h_scale, n)
            return QuadraticReward(H, h, self.noise)
        w = rng.uniform(0.0, 1.0, self.rows)
        a = rng.integers(0, self.max_exponent + 1, (self.rows, n)).astype(float)
        return CoverageReward(w, a, self.noise)

    def __call__(self, t: int) -> RewardFunction:
        key = t if self.mode == "iid" else 0
        if key not in self._cache:
            f = self._generate(self._rng(t))
            if not f.check_monotone(self.upper):
                raise ValueError(f"generated {self.family} reward for round {t} is not monotone on the set")
            self._cache[key] = f
        return self._cache[key]

    def functions(self, T: int) -> List[RewardFunction]:
        """f_0, ..., f_{T-1}."""
        return [self(t) for t in range(T)]

    def bound(self, T: int, decision_set: DecisionSet) -> GradientBound:
        """Largest G and L over the first T rounds."""
        R = decision_set.radius
        bounds = [f.gradient_bound(R) for f in (self.functions(T) if self.mode == "iid" else [self(0)])]
        return GradientBound(
            G=max(b.G for b in bounds),
            L=max(b.L for b in bounds),
            G_f=max(b.G_f for b in bounds),
            sigma=self.noise.sigma,
        )


def _grid_axes(decision_set: DecisionSet, g: int) -> List[np.ndarray]:
    return [np.linspace(0.0, top, g) for top in decision_set.upper]


def offline_best(
    functions: Sequence[RewardFunction],
    decision_set: DecisionSet,
    g: int = 129
) -> Tuple[np.ndarray, float]:
    """
    Best fixed decision in hindsight by grid search.

    Args:
        functions: Rewards of the rounds to compare against
        decision_set: Feasible set (dimension at most 4)
        g: Grid points per axis (at least 32)

    Returns:
        (x*, Σ f_t(x*)) over the feasible grid points
    """
    n = decision_set.dim
    if n > MAX_GRID_DIM:
        raise ValueError(f"grid search supports dimension ≤ {MAX_GRID_DIM}, got {n}")
    if g < 32:
        raise ValueError(f"grid search needs at least 32 points per axis, got {g}")
    total = aggregate(functions)
    axes = _grid_axes(decision_set, g)

    best_x = np.zeros(n)
    best_value = total.value(best_x)
    rest = [r.ravel() for r in np.meshgrid(*axes[1:], indexing="ij")] if n > 1 else []
    # One slab per value of the first coordinate keeps memory at g^(n-1) points
    for first in axes[0]:
        points = np.column_stack([np.full(g ** (n - 1), first)] + rest)
        points = points[decision_set.mask(points, 0.0)]
        if points.shape[0] == 0:
            continue
        values = total.eval_batch(points)
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value = float(values[k])
            best_x = points[k].copy()
    return best_x, best_value


def checkpoint_rounds(T: int, count: int) -> List[int]:
    """Round counts (1-based, increasing, ending at T) at which prefix comparators are recomputed."""
    count = max(1, min(count, T))
    return sorted({int(math.ceil(T * (k + 1) / count)) for k in range(count)})


def prefix_comparator(
    functions: Sequence[RewardFunction],
    decision_set: DecisionSet,
    g: int = 129,
    checkpoints: int = 16
) -> Tuple[np.ndarray, float]:
    """
    Comparator trace Σ_{s≤t} f_s(x*) with x* refreshed at checkpoints.

    Rounds after checkpoint c_{k-1} up to c_k use the best decision for the
    prefix ending at c_k, so the last round uses the full-horizon comparator.

    Args:
        functions: All T rewards
        decision_set: Feasible set
        g: Grid points per axis
        checkpoints: Number of comparator refreshes

    Returns:
        (trace of length T, full-horizon value V*)
    """
    T = len(functions)
    trace = np.zeros(T)
    start = 0
    value = 0.0
    for stop in checkpoint_rounds(T, checkpoints):
        x_star, value = offline_best(functions[:stop], decision_set, g)
        per_round = np.array([f.value(x_star) for f in functions[:stop]])
        trace[start:stop] = np.cumsum(per_round)[start:stop]
        start = stop
    return trace, value


def alpha_regret(
    record: RunRecord,
    comparator: Union[float, np.ndarray],
    alpha: float = BOOST_SCALE,
    rewards: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    α-regret trace α·V*_t − Σ_{s≤t} f_s(x_s).

    Args:
        record: Completed run
        comparator: Prefix comparator trace of length T, or the full-horizon
            value V* (spread evenly over the rounds)
        alpha: Approximation factor
        rewards: Per-round rewards to charge instead of the record's own

    Returns:
        Trace of length T; also stored on the record
    """
    rewards = record.rewards if rewards is None else np.asarray(rewards, dtype=float)
    if np.ndim(comparator) == 0:
        final = float(comparator)
        comparator = final * np.arange(1, record.T + 1) / record.T
    else:
        comparator = np.asarray(comparator, dtype=float)
        if comparator.shape != (record.T,):
            raise ValueError(f"comparator trace must have length {record.T}, got {comparator.shape}")
        final = float(comparator[-1])
    trace = alpha * comparator - np.cumsum(rewards)
    if not np.all(np.isfinite(trace)):
        raise ValueError(f"{record.run_id}: regret trace is not finite")
    record.alpha_regret = trace
    record.comparator_value = final
    return trace


def network_functions(adversaries: Sequence[RewardSource], T: int) -> List[RewardFunction]:
    """Network-average reward (1/N) Σ_j f_{t,j} of every round."""
    return [average([reward_at(source, t) for source in adversaries]) for t in range(T)]


def decentralized_regret(
    records: Sequence[RunRecord],
    adversaries: Sequence[RewardSource],
    decision_set: DecisionSet,
    alpha: float = BOOST_SCALE,
    g: int = 129,
    checkpoints: int = 16
) -> List[float]:
    """
    Per-node α-regret against the network-average reward.

    Every node's decisions are charged under (1/N) Σ_j f_{t,j}, and the
    comparator maximises the same average.

    Returns:
        Final regret of every node, in node order
    """
    T = records[0].T
    averaged = network_functions(adversaries, T)
    comparator, value = prefix_comparator(averaged, decision_set, g, checkpoints)
    finals = []
    for record in records:
        decisions = record.decisions
        charged = np.array([f.value(decisions[t]) for t, f in enumerate(averaged)])
        trace = alpha_regret(record, comparator, alpha, rewards=charged)
        record.extras["network_reward"] = float(charged.sum())
        record.extras["comparator_dominance"] = check_dominance(record, averaged, value)
        finals.append(float(trace[-1]))
    return finals


def check_dominance(record: RunRecord, functions: Sequence[RewardFunction], value: float) -> bool:
    """Whether the comparator beats every played decision, up to grid slack."""
    total = aggregate(functions)
    played = total.eval_batch(record.block_decisions)
    return bool(np.all(played <= value + DOMINANCE_SLACK * max(1.0, abs(value))))


def slope_estimate(pairs: Sequence[Tuple[float, float]]) -> float:
    """
    Least-squares slope of log(regret) against log(T).

    Args:
        pairs: (T, regret) for at least three horizons

    Returns:
        Fitted exponent
    """
    if len(pairs) < 3:
        raise ValueError(f"slope estimation needs at least 3 horizons, got {len(pairs)}")
    valid = [(T, r) for T, r in pairs if r > 0 and T > 0]
    if len(valid) < len(pairs):
        logger.warning(f"⚠️ Excluding {len(pairs) - len(valid)} nonpositive regret values from the slope fit")
    if len(valid) < 2:
        raise ValueError("slope estimation needs at least 2 positive regret values")
    log_T = np.log([T for T, _ in valid])
    log_r = np.log([r for _, r in valid])
    slope, _ = np.polyfit(log_T, log_r, 1)
    return float(slope)


def seed_statistics(values: Sequence[float]) -> Dict[str, float]:
    """Mean and sample standard deviation over seeds."""
    values = np.asarray(values, dtype=float)
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return {"mean": float(values.mean()), "std": std, "count": int(values.size)}


# Config-driven runs


def build_decision_set(spec: SetSpec) -> DecisionSet:
    return set_from_dict(spec.model_dump(exclude_none=True))


def build_adversaries(config: ExperimentConfig, decision_set: DecisionSet, seed: int, nodes: int = 1) -> List[Adversary]:
    spec = config.adversary
    instance = None if spec.instance is None else reward_from_dict({"sigma": spec.sigma, **spec.instance})
    return [
        Adversary(
            spec.family, decision_set, sigma=spec.sigma, seed=spec.seed, mode=spec.mode,
            node=i, run_seed=seed, h_scale=spec.h_scale, H_scale=spec.H_scale,
            rows=spec.rows, max_exponent=spec.max_exponent, instance=instance,
        )
        for i in range(nodes)
    ]


def build_network(config: ExperimentConfig) -> Network:
    spec = config.network
    if spec.nodes == 1:
        return Network.single_node()
    return Network.from_topology(spec.topology, spec.nodes, spec.weights)


def resolve_params(config: ExperimentConfig, T: int, R: float, G: float) -> PobgaParams:
    """Schedule for one horizon; a zero G (all-zero rewards) is treated as 1."""
    spec = config.params
    if spec.mode == "theorem":
        return pobga_params_from_theorem(T, R, G if G > 0 else 1.0)
    if spec.mode == "scaled":
        return pobga_params_from_theorem(T, R, G if G > 0 else 1.0, spec.eta_scale, spec.eps_scale)
    return PobgaParams(T=T, K=config.params.K, eta=config.params.eta, eps=config.params.eps)


def baseline_step(config: ExperimentConfig, T: int, R: float, G: float) -> float:
    """η = R/(G√T) in theorem mode (times eta_scale when scaled), the configured η otherwise."""
    if config.params.mode == "manual":
        return config.params.eta
    scale = config.params.eta_scale if config.params.mode == "scaled" else 1.0
    return scale * R / ((G if G > 0 else 1.0) * math.sqrt(T))


def run_experiment(config: ExperimentConfig, T: int, seed: int, threads: int = 1) -> List[RunRecord]:
    """
    Run the configured learner for one horizon and seed, with regret attached.

    Args:
        config: Validated experiment configuration
        T: Horizon
        seed: Master seed of the learner and of the adversary instances
        threads: Worker threads for the decentralized learner

    Returns:
        One record (one per node for dpobga)
    """
    decision_set = build_decision_set(config.decision_set)
    R = decision_set.radius
    compare = decision_set.dim <= MAX_GRID_DIM
    if not compare:
        logger.warning(f"⚠️ Dimension {decision_set.dim} is too large for the grid comparator; regret not computed")

    if config.algorithm == "dpobga":
        network = build_network(config)
        adversaries = build_adversaries(config, decision_set, seed, network.N)
        bound = max((a.bound(T, decision_set) for a in adversaries), key=lambda b: b.G)
        params = resolve_params(config, T, R, bound.G)
        records = dpobga_run(network, adversaries, decision_set, params, seed, G=bound.G, threads=threads)
        if compare:
            decentralized_regret(records, adversaries, decision_set, g=config.grid, checkpoints=config.checkpoints)
        for record in records:
            record.extras["G"] = bound.G
            record.extras["L"] = bound.L
        return records

    adversary = build_adversaries(config, decision_set, seed)[0]
    bound = adversary.bound(T, decision_set)
    if config.algorithm == "pobga":
        params = resolve_params(config, T, R, bound.G)
        record = pobga_run(adversary, decision_set, params, seed, G=bound.G)
    else:
        eta = baseline_step(config, T, R, bound.G)
        run = oga_run if config.algorithm == "oga" else obga_run
        record = run(adversary, decision_set, eta, T, seed)

    if compare:
        functions = adversary.functions(T)
        comparator, value = prefix_comparator(functions, decision_set, config.grid, config.checkpoints)
        alpha_regret(record, comparator)
        record.extras["comparator_dominance"] = check_dominance(record, functions, value)
        if not record.extras["comparator_dominance"]:
            logger.error(f"❌ {record.run_id}: a played decision beats the grid comparator beyond slack")
    record.extras["G"] = bound.G
    record.extras["L"] = bound.L
    return [record]
