"""
Convex decision sets in the nonnegative orthant that contain the origin

Each set exposes a closed-form linear minimisation oracle, a membership
test, its exact radius max ‖x‖, and the Euclidean projection (the latter is
only used by the projection-based baselines and by tests).
"""
import itertools
import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9


class DecisionSet(ABC):
    """Base class for decision sets"""

    kind: str = "abstract"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = int(dim)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"{self.kind} set expects a vector of length {self.dim}, got shape {x.shape}")
        return x

    @property
    @abstractmethod
    def radius(self) -> float:
        """R = max over the set of ‖x‖."""

    @property
    @abstractmethod
    def upper(self) -> np.ndarray:
        """Coordinatewise maximum of the set."""

    @abstractmethod
    def lmo(self, c: np.ndarray) -> np.ndarray:
        """Minimiser of ⟨c, x⟩ over the set."""

    @abstractmethod
    def contains(self, x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
        """Whether x satisfies every constraint within tol."""

    @abstractmethod
    def mask(self, X: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        """Row-wise membership of the points in X."""

    @abstractmethod
    def project(self, y: np.ndarray) -> np.ndarray:
        """Euclidean projection of y onto the set."""

    @abstractmethod
    def farthest_point(self) -> np.ndarray:
        """A feasible point whose norm equals the radius."""

    @abstractmethod
    def vertices(self) -> Optional[List[np.ndarray]]:
        """All extreme points when there are finitely many, else None."""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Structured description used by configuration files."""

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """
        Rejection-sample feasible points uniformly from the set.

        Args:
            rng: Random stream
            count: Number of points

        Returns:
            Array of shape (count, dim)
        """
        points: List[np.ndarray] = []
        upper = self.upper
        while len(points) < count:
            batch = rng.random((max(64, 2 * count), self.dim)) * upper
            points.extend(batch[self.mask(batch, 0.0)])
        return np.asarray(points[:count])


class Box(DecisionSet):
    """{x : 0 ≤ x ≤ u}"""

    kind = "box"

    def __init__(self, u: Sequence[float]):
        u = np.asarray(u, dtype=float)
        if u.ndim != 1 or np.any(u <= 0):
            raise ValueError("box upper corner must be a positive vector")
        super().__init__(u.shape[0])
        self.u = u

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.u))

    @property
    def upper(self) -> np.ndarray:
        return self.u.copy()

    def lmo(self, c: np.ndarray) -> np.ndarray:
        c = self._check(c)
        return np.where(c < 0, self.u, 0.0)

    def contains(self, x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
        x = self._check(x)
        return bool(np.all(x >= -tol) and np.all(x <= self.u + tol))

    def mask(self, X: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.all(X >= -tol, axis=1) & np.all(X <= self.u + tol, axis=1)

    def project(self, y: np.ndarray) -> np.ndarray:
        return np.clip(self._check(y), 0.0, self.u)

    def farthest_point(self) -> np.ndarray:
        return self.u.copy()

    def vertices(self) -> Optional[List[np.ndarray]]:
        return [np.array(corner, dtype=float) * self.u for corner in itertools.product((0.0, 1.0), repeat=self.dim)]

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "u": self.u.tolist()}


class BudgetedSimplex(DecisionSet):
    """{x : 0 ≤ x ≤ u, Σx ≤ b}, with u = b·1 unless given"""

    kind = "simplex"

    def __init__(self, b: float, dim: int, u: Optional[Sequence[float]] = None):
        if not b > 0:
            raise ValueError(f"simplex budget must be positive, got {b}")
        super().__init__(dim)
        self.b = float(b)
        self.u = np.full(self.dim, self.b) if u is None else np.asarray(u, dtype=float)
        if self.u.shape != (self.dim,) or np.any(self.u <= 0):
            raise ValueError("simplex cap must be a positive vector of the set dimension")

    @property
    def radius(self) -> float:
        # Filling the largest caps first maximises Σx² under the budget
        remaining = self.b
        total = 0.0
        for cap in np.sort(self.u)[::-1]:
            take = min(cap, remaining)
            total += take * take
            remaining -= take
            if remaining <= 0:
                break
        return math.sqrt(total)

    @property
    def upper(self) -> np.ndarray:
        return np.minimum(self.u, self.b)

    def lmo(self, c: np.ndarray) -> np.ndarray:
        c = self._check(c)
        x = np.zeros(self.dim)
        remaining = self.b
        for i in np.argsort(c, kind="stable"):
            if c[i] >= 0 or remaining <= 0:
                break
            x[i] = min(self.u[i], remaining)
            remaining -= x[i]
        return x

    def contains(self, x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
        x = self._check(x)
        return bool(np.all(x >= -tol) and np.all(x <= self.u + tol) and x.sum() <= self.b + tol)

    def mask(self, X: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        inside = np.all(X >= -tol, axis=1) & np.all(X <= self.u + tol, axis=1)
        return inside & (X.sum(axis=1) <= self.b + tol)

    def _clipped_mass(self, y: np.ndarray, theta: float) -> float:
        return float(np.clip(y - theta, 0.0, self.u).sum())

    def project(self, y: np.ndarray) -> np.ndarray:
        y = self._check(y)
        clipped = np.clip(y, 0.0, self.u)
        if clipped.sum() <= self.b:
            return clipped
        # Σ clip(y - θ, 0, u) is piecewise linear and nonincreasing in θ with
        # kinks at y_i and y_i - u_i; locate the piece that hits the budget
        kinks = np.unique(np.concatenate([y, y - self.u, [0.0]]))
        kinks = kinks[kinks >= 0.0]
        masses = np.array([self._clipped_mass(y, t) for t in kinks])
        idx = int(np.searchsorted(-masses, -self.b, side="left"))
        lo, hi = kinks[idx - 1], kinks[idx]
        m_lo, m_hi = masses[idx - 1], masses[idx]
        theta = lo if m_lo == m_hi else lo + (m_lo - self.b) * (hi - lo) / (m_lo - m_hi)
        return np.clip(y - theta, 0.0, self.u)

    def farthest_point(self) -> np.ndarray:
        x = np.zeros(self.dim)
        remaining = self.b
        for i in np.argsort(-self.u, kind="stable"):
            x[i] = min(self.u[i], remaining)
            remaining -= x[i]
            if remaining <= 0:
                break
        return x

    def vertices(self) -> Optional[List[np.ndarray]]:
        found: List[np.ndarray] = []
        seen = set()
        for pattern in itertools.product((0, 1), repeat=self.dim):
            base = np.array(pattern, dtype=float) * self.u
            mass = base.sum()
            if mass > self.b + 1e-12:
                continue
            candidates = [base]
            for j in range(self.dim):
                if pattern[j] == 0 and mass + self.u[j] > self.b:
                    partial = base.copy()
                    partial[j] = self.b - mass
                    candidates.append(partial)
            for v in candidates:
                key = tuple(np.round(v, 12))
                if key not in seen:
                    seen.add(key)
                    found.append(v)
        return found

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "b": self.b, "dim": self.dim, "u": self.u.tolist()}


class NonnegBall(DecisionSet):
    """{x : x ≥ 0, ‖x‖ ≤ R}"""

    kind = "ball"

    def __init__(self, R: float, dim: int):
        if not R > 0:
            raise ValueError(f"ball radius must be positive, got {R}")
        super().__init__(dim)
        self.R = float(R)

    @property
    def radius(self) -> float:
        return self.R

    @property
    def upper(self) -> np.ndarray:
        return np.full(self.dim, self.R)

    def lmo(self, c: np.ndarray) -> np.ndarray:
        c = self._check(c)
        descent = np.maximum(-c, 0.0)
        norm = np.linalg.norm(descent)
        if norm == 0.0:
            return np.zeros(self.dim)
        return self.R * descent / norm

    def contains(self, x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
        x = self._check(x)
        return bool(np.all(x >= -tol) and np.linalg.norm(x) <= self.R + tol)

    def mask(self, X: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.all(X >= -tol, axis=1) & (np.linalg.norm(X, axis=1) <= self.R + tol)

    def project(self, y: np.ndarray) -> np.ndarray:
        x = np.maximum(self._check(y), 0.0)
        norm = np.linalg.norm(x)
        if norm > self.R:
            x *= self.R / norm
        return x

    def farthest_point(self) -> np.ndarray:
        x = np.zeros(self.dim)
        x[0] = self.R
        return x

    def vertices(self) -> Optional[List[np.ndarray]]:
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "R": self.R, "dim": self.dim}


def set_from_dict(data: Dict[str, Any]) -> DecisionSet:
    """
    Rebuild a decision set from its structured description.

    Args:
        data: Dictionary produced by DecisionSet.to_dict

    Returns:
        Decision set of the named kind
    """
    kind = data.get("kind")
    if kind == "box":
        return Box(data["u"])
    if kind == "simplex":
        return BudgetedSimplex(float(data["b"]), int(data["dim"]), data.get("u"))
    if kind == "ball":
        return NonnegBall(float(data["R"]), int(data["dim"]))
    raise ValueError(f"Unknown decision set kind: {kind!r} (expected box, simplex or ball)")


# Operations on any decision set


def lmo(decision_set: DecisionSet, c: np.ndarray) -> np.ndarray:
    """argmin over the set of ⟨c, x⟩, ties to the lowest index, then the origin."""
    return decision_set.lmo(c)


def contains(decision_set: DecisionSet, x: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Membership within an absolute tolerance."""
    return decision_set.contains(x, tol)


def exact_project(decision_set: DecisionSet, y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the set."""
    return decision_set.project(y)


def radius(decision_set: DecisionSet) -> float:
    """Exact radius of the set."""
    return decision_set.radius


def coordinatewise_max(decision_set: DecisionSet) -> np.ndarray:
    """Coordinatewise maximum of the set."""
    return decision_set.upper
