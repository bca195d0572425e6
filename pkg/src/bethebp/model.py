"""Ising models, random generation and brute-force inference.

Spins take values in {-1, +1}; the energy is
``E(x) = -sum_i h_i x_i - sum_(ij) J_ij x_i x_j``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, GraphError
from .graph import Graph
from .pseudomarginal import Pseudomarginals

MAX_ENUM_NODES = 20
RNG_ALGORITHM = "numpy.random.PCG64 seeded via SeedSequence([base_seed, trial_index])"

_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class IsingModel:
    graph: Graph
    h: np.ndarray
    J: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(-1)
        J = np.asarray(self.J, dtype=float).reshape(-1)
        if h.shape != (self.graph.n,):
            raise GraphError(f"h has length {h.size}, expected {self.graph.n}")
        if J.shape != (self.graph.n_edges,):
            raise GraphError(f"J has length {J.size}, expected {self.graph.n_edges}")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(J))):
            raise GraphError("parameters must be finite")
        h.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", J)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def edges(self):
        return self.graph.edges

    @property
    def theta(self) -> np.ndarray:
        """Natural parameters stacked as ``[h, J]``."""
        return np.concatenate([self.h, self.J])

    def with_theta(self, theta: np.ndarray) -> "IsingModel":
        theta = np.asarray(theta, dtype=float)
        return IsingModel(self.graph, theta[: self.n], theta[self.n :])

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], h, J) -> "IsingModel":
        """Build a model from an unsorted edge list; ``J`` follows the given order."""
        edges = [tuple(int(v) for v in e) for e in edges]
        J = np.asarray(J, dtype=float).reshape(-1)
        if len(J) != len(edges):
            raise GraphError("J must align with edges")
        graph = Graph.from_edges(n, edges)
        lookup = {(min(i, j), max(i, j)): c for (i, j), c in zip(edges, J)}
        return cls(graph, np.asarray(h, dtype=float), np.array([lookup[e] for e in graph.edges]))

    def to_json(self) -> dict:
        d = self.graph.to_json()
        d["h"] = self.h.tolist()
        d["J"] = self.J.tolist()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "IsingModel":
        return cls.from_edges(d["n"], d["edges"], d["h"], d["J"])


def trial_seed(base_seed: int, trial_index: int, *extra: int) -> int:
    """Stable 64-bit seed for one work item, independent of execution order."""
    ss = np.random.SeedSequence([int(base_seed), int(trial_index), *map(int, extra)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _resolve_topology(n: int, topology) -> Graph:
    if isinstance(topology, Graph):
        if topology.n != n:
            raise GraphError("topology node count does not match n")
        return topology
    if topology is None or topology == "full":
        return Graph.complete(n)
    return Graph.from_edges(n, topology)


def generate_random_ising(n: int, sigma_h: float, sigma_j: float, topology="full",
                          seed: int = 0) -> IsingModel:
    """Draw ``h_i ~ N(0, sigma_h)`` and ``J_ij ~ N(0, sigma_j)`` (standard deviations).

    ``topology`` is ``"full"``, a :class:`Graph`, or an edge list.
    """
    if n < 1:
        raise GraphError("n must be positive")
    if sigma_h < 0 or sigma_j < 0:
        raise ValueError("standard deviations must be nonnegative")
    graph = _resolve_topology(n, topology)
    rng = np.random.default_rng(seed)
    h = rng.normal(0.0, 1.0, size=n) * sigma_h
    J = rng.normal(0.0, 1.0, size=graph.n_edges) * sigma_j
    return IsingModel(graph, h, J)


def random_tree(n: int, rng: np.random.Generator) -> Graph:
    """Uniform random recursive tree: node k attaches to a random earlier node."""
    edges = [(int(rng.integers(0, k)), k) for k in range(1, n)]
    return Graph.from_edges(n, edges)


def energy(model: IsingModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise ValueError(f"state has shape {x.shape}, expected ({model.n},)")
    e = model.graph.edge_array
    return float(-(model.h @ x) - np.sum(model.J * x[e[:, 0]] * x[e[:, 1]]))


def _states(start: int, stop: int, n: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(float)


def _log_weights(model: IsingModel):
    n = model.n
    if n > MAX_ENUM_NODES:
        raise CapacityError(f"enumeration limited to n <= {MAX_ENUM_NODES}, got n={n}")
    e = model.graph.edge_array
    total = 1 << n
    out = np.empty(total)
    for start in range(0, total, _CHUNK):
        x = _states(start, min(total, start + _CHUNK), n)
        out[start : start + len(x)] = x @ model.h + (x[:, e[:, 0]] * x[:, e[:, 1]]) @ model.J
    return out


def exact_log_partition(model: IsingModel) -> float:
    """log Z by summing over all 2^n spin states."""
    return float(logsumexp(_log_weights(model)))


def exact_marginals(model: IsingModel) -> Pseudomarginals:
    """Exact node and pair marginals ``{q_i^+, q_ij^++}`` by enumeration."""
    lw = _log_weights(model)
    w = np.exp(lw - lw.max())
    w /= w.sum()
    n = model.n
    e = model.graph.edge_array
    qi = np.zeros(n)
    qij = np.zeros(len(e))
    for start in range(0, len(w), _CHUNK):
        x = _states(start, min(len(w), start + _CHUNK), n)
        up = x > 0
        wc = w[start : start + len(x)]
        qi += wc @ up
        qij += wc @ (up[:, e[:, 0]] & up[:, e[:, 1]])
    return Pseudomarginals(model.graph, qi, qij)


def symmetric_four_node(J: float) -> IsingModel:
    """Fully connected 4-node model with zero fields and uniform coupling ``J``."""
    g = Graph.complete(4)
    return IsingModel(g, np.zeros(4), np.full(g.n_edges, float(J)))


def rho_closed_form(J: float) -> float:
    """Probability that a given pair of the symmetric 4-node model is ``(+1, +1)``."""
    s = 1.0 + np.exp(2 * J) - np.exp(4 * J) + np.exp(6 * J)
    return float(1.0 / (2.0 + 4.0 / s))
