"""Pseudomarginals in minimal coordinates and the Bethe free energy.

A pseudomarginal on a pairwise binary graph is stored as ``q_i^+ = q_i(+1)``
per node and ``q_ij^++ = q_ij(+1, +1)`` per edge. The remaining pair cells are
``q^{+-} = q_i^+ - q^{++}``, ``q^{-+} = q_j^+ - q^{++}`` and
``q^{--} = 1 - q_i^+ - q_j^+ + q^{++}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryError, GraphError, InconsistentError
from .graph import Graph

CLAMP = 1e-12
# tolerance used when an operation only needs to reject clearly invalid input
INPUT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Pseudomarginals:
    graph: Graph
    qi_plus: np.ndarray
    qij_pp: np.ndarray

    def __post_init__(self):
        qi = np.asarray(self.qi_plus, dtype=float).reshape(-1)
        qij = np.asarray(self.qij_pp, dtype=float).reshape(-1)
        if qi.shape != (self.graph.n,) or qij.shape != (self.graph.n_edges,):
            raise GraphError(
                f"shape mismatch: got {qi.size} node and {qij.size} edge values for "
                f"a graph with {self.graph.n} nodes and {self.graph.n_edges} edges"
            )
        qi.setflags(write=False)
        qij.setflags(write=False)
        object.__setattr__(self, "qi_plus", qi)
        object.__setattr__(self, "qij_pp", qij)

    def vector(self) -> np.ndarray:
        """Concatenated minimal coordinates, nodes first then edges."""
        return np.concatenate([self.qi_plus, self.qij_pp])

    @classmethod
    def from_vector(cls, graph: Graph, v) -> "Pseudomarginals":
        v = np.asarray(v, dtype=float)
        return cls(graph, v[: graph.n], v[graph.n :])

    @classmethod
    def uniform(cls, graph: Graph) -> "Pseudomarginals":
        return cls(graph, np.full(graph.n, 0.5), np.full(graph.n_edges, 0.25))

    def pair_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Per-edge cells ``(++, +-, -+, --)``; ``+-`` means ``x_i=+1, x_j=-1``."""
        e = self.graph.edge_array
        qi = self.qi_plus[e[:, 0]]
        qj = self.qi_plus[e[:, 1]]
        pp = self.qij_pp
        return pp, qi - pp, qj - pp, 1.0 - qi - qj + pp

    def spin_flip(self) -> "Pseudomarginals":
        _, _, _, mm = self.pair_table()
        return Pseudomarginals(self.graph, 1.0 - self.qi_plus, mm)

    def to_json(self) -> dict:
        return {"qi_plus": self.qi_plus.tolist(), "qij_pp": self.qij_pp.tolist()}

    @classmethod
    def from_json(cls, graph: Graph, d: dict) -> "Pseudomarginals":
        return cls(graph, d["qi_plus"], d["qij_pp"])


@dataclass(frozen=True, eq=False)
class MomentVector:
    graph: Graph
    node: np.ndarray
    edge: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.node, self.edge])


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    magnitude: float


@dataclass(frozen=True)
class ConsistencyReport:
    ok: bool
    violations: list[Violation] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def check_local_consistency(q: Pseudomarginals, tol: float = 0.0) -> ConsistencyReport:
    """Check the box constraints that make every node and pair cell a probability."""
    e = q.graph.edge_array
    qi = q.qi_plus
    a, b = qi[e[:, 0]], qi[e[:, 1]]
    checks = {
        "node_lower": -qi,
        "node_upper": qi - 1.0,
        "edge_lower": np.maximum(0.0, a + b - 1.0) - q.qij_pp,
        "edge_upper": q.qij_pp - np.minimum(a, b),
    }
    violations = []
    for kind, excess in checks.items():
        for idx in np.flatnonzero(~(excess <= tol)):
            violations.append(Violation(kind, int(idx), float(excess[idx])))
    return ConsistencyReport(not violations, violations)


def require_consistent(q: Pseudomarginals, tol: float = INPUT_TOL) -> None:
    report = check_local_consistency(q, tol)
    if not report.ok:
        v = report.violations[0]
        raise InconsistentError(
            f"{len(report.violations)} consistency violation(s); first: {v.kind} "
            f"at index {v.index} by {v.magnitude:.3g}"
        )


def to_moments(q: Pseudomarginals) -> MomentVector:
    """``<x_i> = 2 q_i^+ - 1`` and ``<x_i x_j> = 4 q^++ - 2 q_i^+ - 2 q_j^+ + 1``."""
    e = q.graph.edge_array
    qi = q.qi_plus
    node = 2.0 * qi - 1.0
    edge = 4.0 * q.qij_pp - 2.0 * qi[e[:, 0]] - 2.0 * qi[e[:, 1]] + 1.0
    return MomentVector(q.graph, node, edge)


def from_moments(m: MomentVector, graph: Graph | None = None) -> Pseudomarginals:
    graph = m.graph if graph is None else graph
    e = graph.edge_array
    node = np.asarray(m.node, dtype=float)
    edge = np.asarray(m.edge, dtype=float)
    qi = (node + 1.0) / 2.0
    qij = (edge + 2.0 * qi[e[:, 0]] + 2.0 * qi[e[:, 1]] - 1.0) / 4.0
    return Pseudomarginals(graph, qi, qij)


def _neg_xlogx(c):
    return -c * np.log(np.maximum(c, CLAMP))


def bethe_entropy(q: Pseudomarginals) -> float:
    """Pair entropies plus ``(1 - d_i)``-weighted node entropies."""
    require_consistent(q)
    cells = q.pair_table()
    s_pairs = sum(_neg_xlogx(c) for c in cells)
    qi = q.qi_plus
    s_nodes = _neg_xlogx(qi) + _neg_xlogx(1.0 - qi)
    return float(np.sum(s_pairs) + np.sum((1 - q.graph.degrees) * s_nodes))


def average_energy(model, q: Pseudomarginals) -> float:
    """``U = -theta . eta`` with moments taken from ``q``."""
    model.graph.check_same(q.graph)
    require_consistent(q)
    m = to_moments(q)
    return float(-(model.h @ m.node) - (model.J @ m.edge))


def bethe_free_energy(model, q: Pseudomarginals) -> float:
    return average_energy(model, q) - bethe_entropy(q)


def interior_cells(q: Pseudomarginals):
    """Node and pair cells, raising :class:`BoundaryError` if any is at the clamp floor."""
    qi = q.qi_plus
    cells = q.pair_table()
    for name, arr in (("q_i^+", qi), ("q_i^-", 1.0 - qi)):
        bad = np.flatnonzero(~(arr > CLAMP))
        if bad.size:
            raise BoundaryError(f"{name} at node {int(bad[0])} is {arr[bad[0]]:.3g}")
    for name, arr in zip(("++", "+-", "-+", "--"), cells):
        bad = np.flatnonzero(~(arr > CLAMP))
        if bad.size:
            edge = q.graph.edges[bad[0]]
            raise BoundaryError(f"pair cell {name} on edge {edge} is {arr[bad[0]]:.3g}")
    return qi, cells


def bethe_free_energy_gradient(model, q: Pseudomarginals) -> np.ndarray:
    """Gradient of the Bethe free energy in ``(q_i^+, q_ij^++)`` coordinates."""
    model.graph.check_same(q.graph)
    qi, (pp, pm, mp, mm) = interior_cells(q)
    g = q.graph
    e = g.edge_array
    grad_edge = -4.0 * model.J + np.log(pp * mm / (pm * mp))
    grad_node = -2.0 * model.h + (1 - g.degrees) * np.log(qi / (1.0 - qi))
    np.add.at(grad_node, e[:, 0], 2.0 * model.J + np.log(pm / mm))
    np.add.at(grad_node, e[:, 1], 2.0 * model.J + np.log(mp / mm))
    return np.concatenate([grad_node, grad_edge])
