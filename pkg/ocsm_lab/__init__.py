"""
Online continuous DR-submodular maximization lab: projection-free learners,
their baselines and the experiment harness
"""
from .algorithms import (
    InvariantViolation,
    PobgaParams,
    block_rng,
    obga_run,
    oga_run,
    pobga_params_from_theorem,
    pobga_regret_bound,
    pobga_run,
)
from .decentralized import (
    Network,
    NodeState,
    build_topology,
    consensus_gap,
    dpobga_regret_bound,
    dpobga_run,
    laplacian_weights,
    metropolis_weights,
    spectral_beta,
)
from .experiment_config import ConfigError, ExperimentConfig, load_config
from .harness import Adversary, alpha_regret, decentralized_regret, offline_best, prefix_comparator, slope_estimate
from .records import Counters, RunRecord, write_csv, write_json

__all__ = [
    "InvariantViolation",
    "PobgaParams",
    "block_rng",
    "obga_run",
    "oga_run",
    "pobga_params_from_theorem",
    "pobga_regret_bound",
    "pobga_run",
    "Network",
    "NodeState",
    "build_topology",
    "consensus_gap",
    "dpobga_regret_bound",
    "dpobga_run",
    "laplacian_weights",
    "metropolis_weights",
    "spectral_beta",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "Adversary",
    "alpha_regret",
    "decentralized_regret",
    "offline_best",
    "prefix_comparator",
    "slope_estimate",
    "Counters",
    "RunRecord",
    "write_csv",
    "write_json",
]
