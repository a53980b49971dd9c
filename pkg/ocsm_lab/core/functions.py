"""
Monotone continuous DR-submodular reward families

Every reward f satisfies f(0) = 0, has an analytic gradient, and can report
the gradient-norm bound G and smoothness constant L over a decision set.
The boosting helpers build unbiased stochastic gradients of the auxiliary
function F(x) = ∫₀¹ (e^{z-1}/z) f(z·x) dz from one sampled z per query.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

# 1 - 1/e, the boosting factor and the approximation ratio of the regret
BOOST_SCALE = -math.expm1(-1.0)

# Upper bound on grid points times terms held in memory by eval_batch
_BATCH_BUDGET = 4_000_000


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean gradient noise drawn uniformly from the sphere of radius sigma"""
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0 or not math.isfinite(self.sigma):
            raise ValueError(f"noise radius must be finite and nonnegative, got {self.sigma}")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """
        Draw one perturbation with norm exactly sigma.

        Args:
            n: Dimension
            rng: Random stream (untouched when sigma is 0)

        Returns:
            Perturbation vector of length n
        """
        if self.sigma == 0.0:
            return np.zeros(n)
        direction = rng.standard_normal(n)
        norm = np.linalg.norm(direction)
        while norm == 0.0:
            direction = rng.standard_normal(n)
            norm = np.linalg.norm(direction)
        return self.sigma * direction / norm


@dataclass(frozen=True)
class GradientBound:
    """Stochastic gradient bound G = G_f + sigma and smoothness L of one reward over one set"""
    G: float
    L: float
    G_f: float
    sigma: float


class RewardFunction(ABC):
    """Base class for reward families"""

    family: str = "abstract"

    def __init__(self, dim: int, noise: Optional[NoiseModel] = None):
        self.dim = int(dim)
        self.noise = noise or NoiseModel()

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"{self.family} reward expects a vector of length {self.dim}, got shape {x.shape}")
        return x

    def value(self, x: np.ndarray) -> float:
        """Exact reward f(x)."""
        return float(self.eval_batch(self._check(x)[None, :])[0])

    @abstractmethod
    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        """Exact rewards for every row of X."""

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Exact gradient ∇f(x)."""

    def gradient_batch(self, X: np.ndarray) -> np.ndarray:
        """Exact gradients at every row of X."""
        return np.array([self.gradient(x) for x in np.asarray(X, dtype=float)]).reshape(-1, self.dim)

    @abstractmethod
    def gradient_bound(self, radius: float) -> GradientBound:
        """G and L over any set inside the ambient box with the given radius."""

    @abstractmethod
    def check_monotone(self, upper: np.ndarray) -> bool:
        """Whether ∇f ≥ 0 on the box [0, upper]."""

    @abstractmethod
    def _payload(self) -> Dict[str, Any]:
        ...

    def to_dict(self) -> Dict[str, Any]:
        """Structured description used by configuration files."""
        payload = {"family": self.family, "sigma": self.noise.sigma}
        payload.update(self._payload())
        return payload

    def with_noise(self, noise: NoiseModel) -> "RewardFunction":
        data = self.to_dict()
        data["sigma"] = noise.sigma
        return reward_from_dict(data)


class LinearReward(RewardFunction):
    """f(x) = ⟨g, x⟩ with g ≥ 0"""

    family = "linear"

    def __init__(self, g: Sequence[float], noise: Optional[NoiseModel] = None):
        g = np.asarray(g, dtype=float)
        if g.ndim != 1:
            raise ValueError("linear reward coefficients must be a vector")
        if np.any(g < 0):
            raise ValueError("linear reward coefficients must be nonnegative")
        super().__init__(g.shape[0], noise)
        self.g = g

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.g

    def gradient(self, x: np.ndarray) -> np.ndarray:
        self._check(x)
        return self.g.copy()

    def gradient_batch(self, X: np.ndarray) -> np.ndarray:
        return np.tile(self.g, (np.asarray(X).shape[0], 1))

    def gradient_bound(self, radius: float) -> GradientBound:
        G_f = float(np.linalg.norm(self.g))
        return GradientBound(G=G_f + self.noise.sigma, L=0.0, G_f=G_f, sigma=self.noise.sigma)

    def check_monotone(self, upper: np.ndarray) -> bool:
        return True

    def _payload(self) -> Dict[str, Any]:
        return {"g": self.g.tolist()}


class ZeroReward(LinearReward):
    """The reward that is identically zero"""

    family = "zero"

    def __init__(self, dim: int, noise: Optional[NoiseModel] = None):
        super().__init__(np.zeros(dim), noise)

    def _payload(self) -> Dict[str, Any]:
        return {"dim": self.dim}


class QuadraticReward(RewardFunction):
    """f(x) = hᵀx + ½ xᵀHx with H symmetric and entrywise nonpositive"""

    family = "quadratic"

    def __init__(self, H: Sequence[Sequence[float]], h: Sequence[float], noise: Optional[NoiseModel] = None):
        H = np.asarray(H, dtype=float)
        h = np.asarray(h, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or h.shape != (H.shape[0],):
            raise ValueError(f"quadratic reward needs an n×n H and length-n h, got {H.shape} and {h.shape}")
        if not np.array_equal(H, H.T):
            raise ValueError("quadratic reward matrix H must be symmetric")
        if np.any(H > 0):
            raise ValueError("quadratic reward matrix H must be entrywise nonpositive (DR-submodularity)")
        if np.any(h < 0):
            raise ValueError("quadratic reward vector h must be nonnegative")
        super().__init__(h.shape[0], noise)
        self.H = H
        self.h = h

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X @ self.h + 0.5 * np.einsum("ij,jk,ik->i", X, self.H, X)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        return self.h + self.H @ x

    def gradient_batch(self, X: np.ndarray) -> np.ndarray:
        return self.h + np.asarray(X, dtype=float) @ self.H

    def gradient_bound(self, radius: float) -> GradientBound:
        spectral = float(np.linalg.norm(self.H, 2))
        G_f = float(np.linalg.norm(self.h)) + spectral * radius
        return GradientBound(G=G_f + self.noise.sigma, L=spectral, G_f=G_f, sigma=self.noise.sigma)

    def check_monotone(self, upper: np.ndarray) -> bool:
        return bool(np.all(self.h + self.H @ np.asarray(upper, dtype=float) >= 0))

    def _payload(self) -> Dict[str, Any]:
        return {"H": self.H.tolist(), "h": self.h.tolist()}


class CoverageReward(RewardFunction):
    """
    f(x) = Σ_j w_j (1 − Π_i (1 − x_i)^{a_ji}) on [0, 1]ⁿ

    Exponents are nonnegative integers so the gradient and Hessian stay
    bounded up to the faces x_i = 1.
    """

    family = "coverage"

    def __init__(self, w: Sequence[float], a: Sequence[Sequence[float]], noise: Optional[NoiseModel] = None):
        w = np.asarray(w, dtype=float)
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or w.shape != (a.shape[0],):
            raise ValueError(f"coverage reward needs m weights and an m×n exponent matrix, got {w.shape} and {a.shape}")
        if np.any(w < 0) or np.any(a < 0):
            raise ValueError("coverage weights and exponents must be nonnegative")
        if not np.array_equal(a, np.round(a)):
            raise ValueError("coverage exponents must be integers")
        super().__init__(a.shape[1], noise)
        self.w = w
        self.a = a

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0])
        chunk = max(1, _BATCH_BUDGET // max(1, self.a.size))
        for start in range(0, X.shape[0], chunk):
            block = 1.0 - X[start:start + chunk]
            uncovered = np.prod(block[:, None, :] ** self.a[None, :, :], axis=2)
            out[start:start + chunk] = (1.0 - uncovered) @ self.w
        return out

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        slack = 1.0 - x
        factors = slack[None, :] ** self.a
        lead = self.a * slack[None, :] ** np.maximum(self.a - 1.0, 0.0)
        grad = np.empty(self.dim)
        for i in range(self.dim):
            rest = np.prod(np.delete(factors, i, axis=1), axis=1)
            grad[i] = self.w @ (lead[:, i] * rest)
        return grad

    def gradient_batch(self, X: np.ndarray) -> np.ndarray:
        slack = 1.0 - np.asarray(X, dtype=float)
        factors = slack[:, None, :] ** self.a[None, :, :]
        lead = self.a[None, :, :] * slack[:, None, :] ** np.maximum(self.a - 1.0, 0.0)[None, :, :]
        grads = np.empty((slack.shape[0], self.dim))
        for i in range(self.dim):
            rest = np.prod(np.delete(factors, i, axis=2), axis=2)
            grads[:, i] = (lead[:, :, i] * rest) @ self.w
        return grads

    def gradient_bound(self, radius: float) -> GradientBound:
        # ∂_i f is largest at the origin, and second derivatives are
        # dominated entrywise by the curvature matrix below
        G_f = float(np.linalg.norm(self.w @ self.a))
        weighted = self.a * self.w[:, None]
        curvature = weighted.T @ self.a
        np.fill_diagonal(curvature, np.sum(weighted * (self.a - 1.0), axis=0))
        L = float(np.linalg.norm(curvature, 2))
        return GradientBound(G=G_f + self.noise.sigma, L=L, G_f=G_f, sigma=self.noise.sigma)

    def check_monotone(self, upper: np.ndarray) -> bool:
        return bool(np.all(np.asarray(upper) <= 1.0))

    def _payload(self) -> Dict[str, Any]:
        return {"w": self.w.tolist(), "a": self.a.tolist()}


FAMILIES = {
    "linear": LinearReward,
    "zero": ZeroReward,
    "quadratic": QuadraticReward,
    "coverage": CoverageReward,
}


def reward_from_dict(data: Dict[str, Any]) -> RewardFunction:
    """
    Rebuild a reward from its structured description.

    Args:
        data: Dictionary produced by RewardFunction.to_dict

    Returns:
        Reward instance of the named family
    """
    family = data.get("family")
    noise = NoiseModel(float(data.get("sigma", 0.0)))
    if family == "linear":
        return LinearReward(data["g"], noise)
    if family == "zero":
        return ZeroReward(int(data["dim"]), noise)
    if family == "quadratic":
        return QuadraticReward(data["H"], data["h"], noise)
    if family == "coverage":
        return CoverageReward(data["w"], data["a"], noise)
    raise ValueError(f"Unknown reward family: {family!r} (expected one of {sorted(FAMILIES)})")


def aggregate(functions: Sequence[RewardFunction]) -> RewardFunction:
    """
    Sum same-family rewards into one reward of that family.

    Linear and zero rewards merge into a linear reward; quadratic rewards add
    H and h; coverage rewards stack their rows. Noise is dropped since the
    sum is only ever evaluated exactly.

    Args:
        functions: Non-empty sequence of rewards sharing one dimension

    Returns:
        Reward equal to the pointwise sum
    """
    if not functions:
        raise ValueError("cannot aggregate an empty sequence of rewards")
    dim = functions[0].dim
    if any(f.dim != dim for f in functions):
        raise ValueError("cannot aggregate rewards of different dimensions")
    logger.debug(f"Aggregating {len(functions)} rewards of dimension {dim}")

    if all(isinstance(f, LinearReward) for f in functions):
        return LinearReward(np.sum([f.g for f in functions], axis=0))
    if all(isinstance(f, (QuadraticReward, LinearReward)) for f in functions):
        H = np.zeros((dim, dim))
        h = np.zeros(dim)
        for f in functions:
            if isinstance(f, QuadraticReward):
                H += f.H
                h += f.h
            else:
                h += f.g
        return QuadraticReward(H, h)
    if all(isinstance(f, CoverageReward) for f in functions):
        return CoverageReward(
            np.concatenate([f.w for f in functions]),
            np.vstack([f.a for f in functions]),
        )
    families = sorted({f.family for f in functions})
    raise ValueError(f"cannot aggregate mixed reward families: {families}")


def average(functions: Sequence[RewardFunction]) -> RewardFunction:
    """Pointwise mean of same-family rewards."""
    total = aggregate(functions)
    scale = 1.0 / len(functions)
    if isinstance(total, LinearReward):
        return LinearReward(total.g * scale)
    if isinstance(total, QuadraticReward):
        return QuadraticReward(total.H * scale, total.h * scale)
    return CoverageReward(total.w * scale, total.a)


# Operations on any reward


def evaluate(f: RewardFunction, x: np.ndarray) -> float:
    """Exact reward f(x)."""
    return f.value(x)


def grad(f: RewardFunction, x: np.ndarray) -> np.ndarray:
    """Exact gradient ∇f(x)."""
    return f.gradient(x)


def stochastic_grad(
    f: RewardFunction,
    x: np.ndarray,
    noise: Optional[NoiseModel] = None,
    rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    """
    Unbiased stochastic gradient ∇f(x) + ξ with ‖ξ‖ = sigma.

    Args:
        f: Reward
        x: Query point
        noise: Noise model (defaults to the reward's own)
        rng: Random stream, required when sigma > 0

    Returns:
        Noisy gradient
    """
    noise = noise or f.noise
    exact = f.gradient(x)
    if noise.sigma == 0.0:
        return exact
    if rng is None:
        raise ValueError("a random stream is required for noisy gradients")
    return exact + noise.sample(f.dim, rng)


def boost_z_from_uniform(p: float) -> float:
    """
    Inverse CDF of the boosting variable Z with density e^{z-1}/(1 - e^{-1}) on [0, 1].

    Args:
        p: Uniform draw in [0, 1]

    Returns:
        z = 1 + ln(e^{-1} + p(1 - e^{-1}))
    """
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    z = 1.0 + math.log1p(-(1.0 - p) * BOOST_SCALE)
    return min(1.0, max(0.0, z))


def boost_cdf(z: float) -> float:
    """P(Z ≤ z) for z in [0, 1]."""
    return (math.exp(z - 1.0) - math.exp(-1.0)) / BOOST_SCALE


def sample_boost_z(rng: np.random.Generator) -> float:
    """Draw z from the boosting distribution."""
    return boost_z_from_uniform(float(rng.random()))


def boosted_stochastic_grad(
    f: RewardFunction,
    x: np.ndarray,
    noise: Optional[NoiseModel] = None,
    rng: Optional[np.random.Generator] = None,
    return_z: bool = False
) -> Union[np.ndarray, Tuple[np.ndarray, float]]:
    """
    Unbiased stochastic gradient of the auxiliary function at x.

    Draws z first, then the gradient noise, from the same stream; returns
    (1 - e^{-1}) · (∇f(z·x) + ξ).

    Args:
        f: Reward
        x: Query point in the decision set
        noise: Noise model (defaults to the reward's own)
        rng: Random stream
        return_z: Also return the sampled z

    Returns:
        Boosted gradient, or (boosted gradient, z)
    """
    if rng is None:
        raise ValueError("a random stream is required for boosted gradients")
    x = np.asarray(x, dtype=float)
    z = sample_boost_z(rng)
    boosted = BOOST_SCALE * stochastic_grad(f, z * x, noise, rng)
    if return_z:
        return boosted, z
    return boosted


@lru_cache(maxsize=32)
def _unit_interval_rule(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (t + 1.0), 0.5 * w


def _check_nodes(nodes: int) -> None:
    if nodes < 16:
        raise ValueError(f"quadrature needs at least 16 nodes, got {nodes}")


def boost_grad_quadrature(f: RewardFunction, x: np.ndarray, nodes: int = 64) -> np.ndarray:
    """
    ∇F(x) = ∫₀¹ e^{z-1} ∇f(z·x) dz by Gauss-Legendre quadrature.

    Args:
        f: Reward
        x: Point
        nodes: Number of quadrature nodes (at least 16)

    Returns:
        Gradient of the auxiliary function
    """
    _check_nodes(nodes)
    x = f._check(x)
    z, w = _unit_interval_rule(nodes)
    grads = f.gradient_batch(z[:, None] * x[None, :])
    return (w * np.exp(z - 1.0)) @ grads


def boost_value_quadrature(f: RewardFunction, x: np.ndarray, nodes: int = 64) -> float:
    """
    F(x) = ∫₀¹ (e^{z-1}/z) f(z·x) dz by Gauss-Legendre quadrature.

    The rule is open, so z = 0 is never evaluated; f(0) = 0 keeps the
    integrand bounded there.

    Args:
        f: Reward
        x: Point
        nodes: Number of quadrature nodes (at least 16)

    Returns:
        Auxiliary function value
    """
    _check_nodes(nodes)
    x = f._check(x)
    z, w = _unit_interval_rule(nodes)
    values = f.eval_batch(z[:, None] * x[None, :])
    return float(np.sum(w * np.exp(z - 1.0) / z * values))

