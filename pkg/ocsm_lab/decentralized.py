"""
Decentralized projection-free boosting gradient ascent over a gossip network

Nodes run synchronous block rounds: every node snapshots and exchanges its
decision and anchor, accumulates K local boosted gradients, then mixes the
neighbours' snapshots with the weight matrix and calls the infeasible
projection oracle from the mixed decision.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .algorithms import (
    InvariantViolation,
    PobgaParams,
    RewardSource,
    block_rng,
    check_oracle_output,
    reward_at,
)
from .core.functions import BOOST_SCALE, boosted_stochastic_grad
from .core.infeasible_projection import IPResult, o_ip
from .core.sets import DecisionSet
from .records import RunRecord, TraceBuilder

logger = logging.getLogger(__name__)

TOPOLOGIES = ("complete", "cycle", "star", "grid", "path")
WEIGHT_SCHEMES = ("metropolis", "laplacian")

# Looser slack for bounds that sum over nodes and blocks
CONSENSUS_SLACK = 1e-6


def build_topology(kind: str, N: int) -> nx.Graph:
    """
    Connected undirected graph of a named family on nodes 0..N-1.

    Args:
        kind: complete, cycle, star, grid or path
        N: Number of nodes (at least 2; a perfect square for grid; at least 3 for cycle)

    Returns:
        networkx Graph
    """
    if N < 2:
        raise ValueError(f"a network needs at least 2 nodes, got N={N}")
    if kind == "complete":
        return nx.complete_graph(N)
    if kind == "cycle":
        if N < 3:
            raise ValueError(f"a cycle needs at least 3 nodes, got N={N}")
        return nx.cycle_graph(N)
    if kind == "star":
        return nx.star_graph(N - 1)
    if kind == "path":
        return nx.path_graph(N)
    if kind == "grid":
        side = math.isqrt(N)
        if side * side != N:
            raise ValueError(f"a grid needs a perfect-square node count, got N={N}")
        return nx.convert_node_labels_to_integers(nx.grid_2d_graph(side, side), ordering="sorted")
    raise ValueError(f"Unknown topology: {kind!r} (expected one of {', '.join(TOPOLOGIES)})")


def _degrees(graph: nx.Graph) -> np.ndarray:
    return np.array([graph.degree(i) for i in range(graph.number_of_nodes())], dtype=float)


def metropolis_weights(graph: nx.Graph) -> np.ndarray:
    """
    a_ij = 1/(1 + max(d_i, d_j)) on edges, diagonal absorbs the rest of each row.

    Args:
        graph: Connected undirected graph on nodes 0..N-1

    Returns:
        Symmetric doubly stochastic N×N matrix supported on the graph
    """
    N = graph.number_of_nodes()
    degrees = _degrees(graph)
    A = np.zeros((N, N))
    for i, j in graph.edges():
        if i == j:
            continue
        A[i, j] = A[j, i] = 1.0 / (1.0 + max(degrees[i], degrees[j]))
    np.fill_diagonal(A, 1.0 - A.sum(axis=1))
    return A


def laplacian_weights(graph: nx.Graph) -> np.ndarray:
    """A = I − (D − Adj)/(1 + d_max)."""
    N = graph.number_of_nodes()
    adjacency = nx.to_numpy_array(graph, nodelist=range(N))
    degrees = adjacency.sum(axis=1)
    return np.eye(N) - (np.diag(degrees) - adjacency) / (1.0 + degrees.max())


def spectral_beta(A: np.ndarray) -> float:
    """
    Second-largest eigenvalue magnitude max(|λ₂|, |λ_N|) of a symmetric matrix.

    Args:
        A: Symmetric doubly stochastic matrix

    Returns:
        β (0 for a single node)
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"weight matrix must be square, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12):
        raise ValueError("weight matrix must be symmetric")
    if A.shape[0] == 1:
        return 0.0
    eigenvalues = np.linalg.eigvalsh(A)[::-1]
    return float(max(abs(eigenvalues[1]), abs(eigenvalues[-1])))


@dataclass
class Network:
    """Communication graph with its mixing matrix"""
    graph: nx.Graph
    A: np.ndarray
    beta: float

    @property
    def N(self) -> int:
        return self.A.shape[0]

    def neighbours(self, i: int) -> List[int]:
        """Nodes whose snapshot node i mixes (itself included)."""
        return [j for j in range(self.N) if self.A[i, j] > 0]

    def validate(self, tol: float = 1e-12) -> None:
        """Raise ValueError unless the weight-matrix conditions hold."""
        A = self.A
        if np.any(A < 0):
            raise ValueError("weight matrix has negative entries")
        if not np.array_equal(A, A.T):
            raise ValueError("weight matrix is not symmetric")
        if not np.allclose(A.sum(axis=1), 1.0, rtol=0.0, atol=tol):
            raise ValueError("weight matrix rows do not sum to one")
        if not np.allclose(A.sum(axis=0), 1.0, rtol=0.0, atol=tol):
            raise ValueError("weight matrix columns do not sum to one")
        for i in range(self.N):
            for j in range(self.N):
                if i != j and A[i, j] > 0 and not self.graph.has_edge(i, j):
                    raise ValueError(f"weight a[{i},{j}] is positive but ({i},{j}) is not an edge")
        if self.N > 1 and self.beta >= 1.0:
            raise ValueError(f"spectral quantity β={self.beta:.6g} must be below 1 (is the graph connected?)")

    @classmethod
    def from_topology(cls, kind: str, N: int, scheme: str = "metropolis") -> "Network":
        graph = build_topology(kind, N)
        if scheme == "metropolis":
            A = metropolis_weights(graph)
        elif scheme == "laplacian":
            A = laplacian_weights(graph)
        else:
            raise ValueError(f"Unknown weight scheme: {scheme!r} (expected one of {', '.join(WEIGHT_SCHEMES)})")
        network = cls(graph=graph, A=A, beta=spectral_beta(A))
        network.validate()
        return network

    @classmethod
    def single_node(cls) -> "Network":
        """The one-node network, on which the decentralized learner is POBGA."""
        graph = nx.empty_graph(1)
        return cls(graph=graph, A=np.ones((1, 1)), beta=0.0)


@dataclass
class NodeState:
    """Local state of one node at the start of a block"""
    node: int
    x: np.ndarray
    y_tilde: np.ndarray
    y: np.ndarray                      # pre-projection point y_m (zero in block 1)
    trace: Optional[TraceBuilder] = field(repr=False, default=None)


def consensus_gap(states: Sequence[NodeState]) -> Tuple[float, float]:
    """
    Deviation of the anchors from their network average.

    Args:
        states: Node states at the same block

    Returns:
        (max over nodes of ‖ỹ^i − ŷ‖, √Σ_i ‖ỹ^i − ŷ‖²)
    """
    anchors = np.stack([s.y_tilde for s in states])
    deviations = np.linalg.norm(anchors - anchors.mean(axis=0), axis=1)
    return float(deviations.max()), float(math.sqrt(float(deviations @ deviations)))


def residual_bound(params: PobgaParams, G: float) -> float:
    """2√(3ε) + 2(1 − e^{-1})ηKG, the bound on ‖ỹ_m^i − y_m^i‖."""
    return 2.0 * math.sqrt(3.0 * params.eps) + 2.0 * BOOST_SCALE * params.eta * params.K * G


def consensus_bound(params: PobgaParams, G: float, N: int, beta: float) -> float:
    """√N(3(1 − e^{-1})ηKG + 2√(3ε))/(1 − β)."""
    spread = 3.0 * BOOST_SCALE * params.eta * params.K * G + 2.0 * math.sqrt(3.0 * params.eps)
    return math.sqrt(N) * spread / (1.0 - beta)


def disagreement_bound(params: PobgaParams, G: float, N: int, beta: float) -> float:
    """(3√(2ε) + (3(1 − e^{-1})ηKG + 2√(3ε))/(1 − β))(N^{3/2} + N), bounding Σ_i ‖x^i − x^j‖."""
    spread = 3.0 * BOOST_SCALE * params.eta * params.K * G + 2.0 * math.sqrt(3.0 * params.eps)
    return (3.0 * math.sqrt(2.0 * params.eps) + spread / (1.0 - beta)) * (N ** 1.5 + N)


def dpobga_regret_bound(T: int, R: float, G: float, L: float, N: int, beta: float) -> float:
    """Per-node (1 − 1/e)-regret bound of the decentralized learner under theorem parameters."""
    root = math.sqrt(N) + 1.0
    gradient_part = (958.0 + 86.0 * root) + (842.0 + 130.0 * root) / (1.0 - beta)
    smooth_part = (171.0 + 260.0 / (1.0 - beta)) * math.exp(-1.0) * root
    return (gradient_part * BOOST_SCALE * R * G + smooth_part * R * R * L) * T ** 0.75


def _check_block(states: List[NodeState], params: PobgaParams, G: float, beta: float, block: int) -> Dict[str, float]:
    N = len(states)
    r_limit = residual_bound(params, G)
    residuals = [float(np.linalg.norm(s.y_tilde - s.y)) for s in states]
    worst = max(residuals)
    if worst > r_limit + CONSENSUS_SLACK:
        raise InvariantViolation(f"block {block}: residual {worst:.6g} exceeds {r_limit:.6g}")

    _, aggregate_gap = consensus_gap(states)
    c_limit = consensus_bound(params, G, N, beta)
    if aggregate_gap > c_limit + CONSENSUS_SLACK:
        raise InvariantViolation(f"block {block}: consensus gap {aggregate_gap:.6g} exceeds {c_limit:.6g}")

    decisions = np.stack([s.x for s in states])
    d_limit = disagreement_bound(params, G, N, beta)
    spread = max(float(np.linalg.norm(decisions - decisions[j], axis=1).sum()) for j in range(N))
    if spread > d_limit + CONSENSUS_SLACK:
        raise InvariantViolation(f"block {block}: decision disagreement {spread:.6g} exceeds {d_limit:.6g}")
    return {"residual": worst, "consensus": aggregate_gap, "disagreement": spread}


def dpobga_run(
    network: Network,
    adversaries: Sequence[RewardSource],
    decision_set: DecisionSet,
    params: PobgaParams,
    seed: int,
    G: Optional[float] = None,
    instrument: bool = True,
    threads: int = 1
) -> List[RunRecord]:
    """
    Decentralized projection-free online boosting gradient ascent.

    Args:
        network: Graph and weight matrix
        adversaries: One reward source per node
        decision_set: Feasible set shared by all nodes
        params: Horizon, block size, step size and tolerance
        seed: Master seed; node i in block m draws from block_rng(seed, i, m)
        G: Gradient bound; enables the residual, consensus and disagreement checks
        instrument: Check the oracle output invariants every block
        threads: Worker threads for the per-node phase

    Returns:
        One RunRecord per node
    """
    N = network.N
    if len(adversaries) != N:
        raise ValueError(f"need one reward source per node, got {len(adversaries)} for N={N}")
    if N > 1 and network.beta >= 1.0:
        raise ValueError(f"spectral quantity β={network.beta:.6g} must be below 1")

    dim = decision_set.dim
    states = [
        NodeState(i, np.zeros(dim), np.zeros(dim), np.zeros(dim), TraceBuilder(params.T, params.K, dim))
        for i in range(N)
    ]
    degrees = [len(network.neighbours(i)) - (1 if network.A[i, i] > 0 else 0) for i in range(N)]
    diagnostics: List[Dict[str, float]] = []

    def advance(i: int, block: int, X: np.ndarray, Y: np.ndarray) -> Tuple[IPResult, np.ndarray]:
        state = states[i]
        counters = state.trace.counters
        rng = block_rng(seed, i, block)
        accumulated = np.zeros(dim)
        for t in range(block * params.K, (block + 1) * params.K):
            f = reward_at(adversaries[i], t)
            state.trace.play(t, f.value(state.x))
            accumulated += boosted_stochastic_grad(f, state.x, rng=rng)
            counters.grad_evals += 1
        y_next = network.A[i] @ Y + params.eta * accumulated
        return o_ip(decision_set, network.A[i] @ X, y_next, params.eps), y_next

    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 and N > 1 else None
    try:
        for m in range(params.num_blocks):
            if instrument and G is not None:
                diagnostics.append(_check_block(states, params, G, network.beta, m + 1))

            # Exchange: every node reads the same pre-round snapshot
            X = np.stack([s.x for s in states])
            Y = np.stack([s.y_tilde for s in states])
            for i, state in enumerate(states):
                state.trace.block_decisions[m] = state.x
                state.trace.counters.comms += 1
                state.trace.counters.messages += 2 * degrees[i]

            if executor is None:
                outcomes = [advance(i, m, X, Y) for i in range(N)]
            else:
                outcomes = list(executor.map(lambda i: advance(i, m, X, Y), range(N)))

            for state, (result, y_next) in zip(states, outcomes):
                state.trace.counters.lo_steps += result.lo_steps
                state.trace.counters.oip_calls += 1
                state.trace.counters.oip_outer_iterations += result.outer_iterations
                state.x, state.y_tilde, state.y = result.x, result.y_tilde, y_next
                if instrument:
                    check_oracle_output(decision_set, result.x, result.y_tilde, params.eps, f"node {state.node} block {m + 1}")
        if instrument and G is not None:
            diagnostics.append(_check_block(states, params, G, network.beta, params.num_blocks + 1))
    finally:
        if executor is not None:
            executor.shutdown()

    logger.debug(f"dpobga finished: N={N}, T={params.T}, K={params.K}, beta={network.beta:.4f}")
    extras = {"eta": params.eta, "eps": params.eps, "beta": network.beta}
    if diagnostics:
        extras["max_residual"] = max(d["residual"] for d in diagnostics)
        extras["max_consensus_gap"] = max(d["consensus"] for d in diagnostics)
        extras["consensus_trace"] = [d["consensus"] for d in diagnostics]
    return [s.trace.build("dpobga", seed, node=s.node, **extras) for s in states]
