"""
Run records: per-round decisions, rewards and cost counters for one learner
"""
import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CSV_FIELDS = [
    "run_id", "algorithm", "T", "K", "seed", "t", "block", "reward", "cum_reward",
    "lo_steps", "grad_evals", "comms", "alpha_regret",
]


@dataclass
class Counters:
    """Cost counters of one learner; every field only ever grows"""
    grad_evals: int = 0
    lo_steps: int = 0
    projections: int = 0
    comms: int = 0
    oip_calls: int = 0
    oip_outer_iterations: int = 0
    messages: int = 0

    def as_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass
class RunRecord:
    """Everything one learner did during one run"""
    algorithm: str
    seed: int
    T: int
    K: int
    block_decisions: np.ndarray              # (num_blocks, n): decision played in each block
    rewards: np.ndarray                      # (T,): exact f_t(x_t)
    cum_lo_steps: np.ndarray                 # (T,): lo_steps spent before round t was played
    cum_grad_evals: np.ndarray               # (T,)
    cum_comms: np.ndarray                    # (T,)
    counters: Counters = field(default_factory=Counters)
    node: Optional[int] = None
    comparator_value: Optional[float] = None
    alpha_regret: Optional[np.ndarray] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def run_id(self) -> str:
        suffix = "" if self.node is None else f"_node{self.node}"
        return f"{self.algorithm}_T{self.T}_seed{self.seed}{suffix}"

    @property
    def blocks(self) -> np.ndarray:
        """Block index of every round."""
        return np.arange(self.T) // self.K

    @property
    def decisions(self) -> np.ndarray:
        """(T, n) decision played in every round."""
        return self.block_decisions[self.blocks]

    @property
    def cum_rewards(self) -> np.ndarray:
        return np.cumsum(self.rewards)

    def same_trajectory(self, other: "RunRecord") -> bool:
        """Bit-level equality of decisions, rewards and oracle costs (communication is ignored)."""
        arrays = ("block_decisions", "rewards", "cum_lo_steps", "cum_grad_evals")
        return (
            self.T == other.T
            and self.K == other.K
            and self.counters.lo_steps == other.counters.lo_steps
            and self.counters.grad_evals == other.counters.grad_evals
            and all(np.array_equal(getattr(self, name), getattr(other, name)) for name in arrays)
        )

    def csv_rows(self) -> List[Dict[str, Any]]:
        """Rows in the CSV schema, one per round."""
        cum = self.cum_rewards
        blocks = self.blocks
        rows = []
        for t in range(self.T):
            regret = "" if self.alpha_regret is None else repr(float(self.alpha_regret[t]))
            rows.append({
                "run_id": self.run_id,
                "algorithm": self.algorithm,
                "T": self.T,
                "K": self.K,
                "seed": self.seed,
                "t": t + 1,
                "block": int(blocks[t]) + 1,
                "reward": repr(float(self.rewards[t])),
                "cum_reward": repr(float(cum[t])),
                "lo_steps": int(self.cum_lo_steps[t]),
                "grad_evals": int(self.cum_grad_evals[t]),
                "comms": int(self.cum_comms[t]),
                "alpha_regret": regret,
            })
        return rows

    def summary(self) -> Dict[str, Any]:
        """Final values for the JSON summary."""
        final_regret = None if self.alpha_regret is None else float(self.alpha_regret[-1])
        return {
            "run_id": self.run_id,
            "algorithm": self.algorithm,
            "node": self.node,
            "seed": self.seed,
            "T": self.T,
            "K": self.K,
            "total_reward": float(self.rewards.sum()),
            "comparator_value": self.comparator_value,
            "alpha_regret": final_regret,
            "counters": self.counters.as_dict(),
            **{key: value for key, value in self.extras.items() if not isinstance(value, (list, np.ndarray))},
        }


class TraceBuilder:
    """Accumulates per-round values while a learner runs"""

    def __init__(self, T: int, K: int, dim: int):
        self.T = T
        self.K = K
        self.block_decisions = np.zeros((T // K, dim))
        self.rewards = np.zeros(T)
        self.cum_lo_steps = np.zeros(T, dtype=np.int64)
        self.cum_grad_evals = np.zeros(T, dtype=np.int64)
        self.cum_comms = np.zeros(T, dtype=np.int64)
        self.counters = Counters()

    def play(self, t: int, reward: float) -> None:
        self.rewards[t] = reward
        self.cum_lo_steps[t] = self.counters.lo_steps
        self.cum_grad_evals[t] = self.counters.grad_evals
        self.cum_comms[t] = self.counters.comms

    def build(self, algorithm: str, seed: int, node: Optional[int] = None, **extras: Any) -> RunRecord:
        return RunRecord(
            algorithm=algorithm,
            seed=seed,
            T=self.T,
            K=self.K,
            block_decisions=self.block_decisions,
            rewards=self.rewards,
            cum_lo_steps=self.cum_lo_steps,
            cum_grad_evals=self.cum_grad_evals,
            cum_comms=self.cum_comms,
            counters=self.counters,
            node=node,
            extras=dict(extras),
        )


def write_csv(records: Sequence[RunRecord], file_path: Path) -> Path:
    """
    Write one or more records to a CSV file in the shared schema.

    Args:
        records: Records to write, in order
        file_path: Destination

    Returns:
        The path written
    """
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for record in records:
            writer.writerows(record.csv_rows())
    logger.info(f"📊 Wrote {sum(r.T for r in records)} rows to {file_path}")
    return file_path


def write_json(payload: Dict[str, Any], file_path: Path) -> Path:
    """Write a JSON document with stable key order."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False)
    logger.info(f"📊 Wrote summary to {file_path}")
    return file_path
