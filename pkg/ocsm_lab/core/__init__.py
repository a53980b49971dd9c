"""
Core primitives: rewards, decision sets and the infeasible projection oracle
"""
from .config import LabSettings, get_settings
from .functions import (
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
    boost_grad_quadrature,
    boost_value_quadrature,
    boosted_stochastic_grad,
    evaluate,
    grad,
    reward_from_dict,
    sample_boost_z,
    stochastic_grad,
)
from .sets import Box, BudgetedSimplex, DecisionSet, NonnegBall, set_from_dict
from .infeasible_projection import IPResult, OracleBudgetError, ShfwOutcome, StopReason, o_ip, shfw

__all__ = [
    "LabSettings",
    "get_settings",
    "BOOST_SCALE",
    "CoverageReward",
    "GradientBound",
    "LinearReward",
    "NoiseModel",
    "QuadraticReward",
    "RewardFunction",
    "ZeroReward",
    "aggregate",
    "average",
    "boost_grad_quadrature",
    "boost_value_quadrature",
    "boosted_stochastic_grad",
    "evaluate",
    "grad",
    "reward_from_dict",
    "sample_boost_z",
    "stochastic_grad",
    "Box",
    "BudgetedSimplex",
    "DecisionSet",
    "NonnegBall",
    "set_from_dict",
    "IPResult",
    "OracleBudgetError",
    "ShfwOutcome",
    "StopReason",
    "o_ip",
    "shfw",
]
