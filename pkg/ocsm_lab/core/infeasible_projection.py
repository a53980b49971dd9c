"""
Infeasible projection through a linear optimisation oracle

shfw runs Frank-Wolfe on ‖x − y‖² and stops as soon as it is close to y or
has certified a hyperplane separating y from the set. o_ip alternates shfw
with a fixed-step pull of the target towards the feasible iterate, returning
a feasible point x and a point ỹ in the radius ball that is no farther from
any feasible point than the input was.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np

from .sets import DecisionSet

logger = logging.getLogger(__name__)

# Multiple of the theoretical iteration count after which a loop is treated as a bug
_CAP_FACTOR = 10


class OracleBudgetError(RuntimeError):
    """An oracle exceeded its proven iteration or linear-optimisation budget"""


class StopReason(Enum):
    CLOSE = "close"
    SEPARATING = "separating"


@dataclass
class LoCounter:
    """Running count of linear optimisation calls"""
    steps: int = 0

    def tick(self) -> None:
        self.steps += 1


@dataclass(frozen=True)
class ShfwOutcome:
    """Result of one separating-hyperplane Frank-Wolfe run"""
    x_tilde: np.ndarray
    reason: StopReason
    lo_steps: int


@dataclass(frozen=True)
class IPResult:
    """Output pair of the infeasible projection plus its cost"""
    x: np.ndarray
    y_tilde: np.ndarray
    lo_steps: int
    outer_iterations: int = 0


def shfw_step_bound(R: float, eps: float) -> int:
    """⌈27R²/ε − 2⌉ floored at one (every shfw call evaluates at least one LMO)."""
    return max(1, math.ceil(27.0 * R * R / eps - 2.0))


def outer_iteration_bound(dist_sq: float, eps: float) -> float:
    """max(1, ‖x0 − y0‖²(‖x0 − y0‖² − ε)/(4ε²) + 1)."""
    return max(1.0, dist_sq * (dist_sq - eps) / (4.0 * eps * eps) + 1.0)


def lo_budget(R: float, eps: float, dist_sq: float) -> float:
    """
    Maximum number of LMO calls one o_ip call may use.

    Args:
        R: Radius of the decision set
        eps: Error tolerance
        dist_sq: ‖x0 − y0‖² of the call

    Returns:
        shfw_step_bound(R, eps) · outer_iteration_bound(dist_sq, eps)
    """
    return shfw_step_bound(R, eps) * outer_iteration_bound(dist_sq, eps)


def shfw(
    decision_set: DecisionSet,
    x_init: np.ndarray,
    y_target: np.ndarray,
    eps: float,
    counter: Optional[LoCounter] = None
) -> ShfwOutcome:
    """
    Separating hyperplane via Frank-Wolfe.

    One LMO is evaluated before each stop check, so even a call with
    x_init = y_target costs one step.

    Args:
        decision_set: Feasible set
        x_init: Starting point inside the set
        y_target: Target point
        eps: Error tolerance (positive)
        counter: Optional counter incremented once per LMO call

    Returns:
        ShfwOutcome with the final iterate and the stop condition that fired

    Raises:
        OracleBudgetError: If the loop runs past ten times its proven length
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.array(x_init, dtype=float)
    y = np.asarray(y_target, dtype=float)
    cap = _CAP_FACTOR * math.ceil(27.0 * decision_set.radius ** 2 / eps)
    steps = 0

    while True:
        if steps >= cap:
            raise OracleBudgetError(
                f"shfw did not stop after {steps} LMO calls (cap {cap}, eps={eps:.3e})"
            )
        residual = x - y
        v = decision_set.lmo(residual)
        steps += 1
        if counter is not None:
            counter.tick()

        dist_sq = float(residual @ residual)
        if dist_sq <= 3.0 * eps:
            return ShfwOutcome(x, StopReason.CLOSE, steps)
        if float(residual @ (x - v)) <= eps:
            return ShfwOutcome(x, StopReason.SEPARATING, steps)

        direction = v - x
        length_sq = float(direction @ direction)
        sigma = 0.0 if length_sq == 0.0 else min(1.0, max(0.0, float(-residual @ direction) / length_sq))
        x = x + sigma * direction


def o_ip(
    decision_set: DecisionSet,
    x0: np.ndarray,
    y0: np.ndarray,
    eps: float,
    trace: Optional[List[np.ndarray]] = None
) -> IPResult:
    """
    Infeasible projection of y0 given a feasible warm start x0.

    Args:
        decision_set: Feasible set
        x0: Feasible point
        y0: Point to project
        eps: Error tolerance (positive)
        trace: If given, receives the internal target sequence y_1, y_2, ...

    Returns:
        IPResult with x feasible, ‖ỹ‖ ≤ R, ‖x − ỹ‖² ≤ 3ε and
        ‖ỹ − z‖² ≤ ‖y0 − z‖² for every feasible z

    Raises:
        OracleBudgetError: If the call uses more LMO steps than lo_budget allows
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    R = decision_set.radius

    y = y0 / max(1.0, float(np.linalg.norm(y0)) / R)
    if trace is not None:
        trace.append(y.copy())

    dist0_sq = float((x0 - y0) @ (x0 - y0))
    if dist0_sq <= 3.0 * eps:
        return IPResult(x0.copy(), y, 0, 0)

    gamma = 2.0 * eps / dist0_sq
    budget = lo_budget(R, eps, dist0_sq)
    outer_cap = _CAP_FACTOR * math.ceil(outer_iteration_bound(dist0_sq, eps))
    counter = LoCounter()
    x = x0
    outer = 0

    while True:
        outer += 1
        if outer > outer_cap:
            raise OracleBudgetError(f"o_ip did not stop after {outer_cap} outer iterations (eps={eps:.3e})")
        x = shfw(decision_set, x, y, eps, counter).x_tilde
        gap = x - y
        if float(gap @ gap) <= 3.0 * eps:
            break
        y = y - gamma * (y - x)
        if trace is not None:
            trace.append(y.copy())

    if counter.steps > budget:
        raise OracleBudgetError(
            f"o_ip used {counter.steps} LMO calls, above its budget of {budget:.1f} "
            f"(R={R:.3g}, eps={eps:.3e}, ‖x0−y0‖²={dist0_sq:.3e})"
        )
    logger.debug(f"o_ip finished in {outer} outer iterations and {counter.steps} LMO calls")
    return IPResult(x, y, counter.steps, outer)
