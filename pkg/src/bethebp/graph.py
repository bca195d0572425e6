"""Pairwise graph topology shared by models and pseudomarginals."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphError, GraphMismatchError


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on ``n`` nodes.

    ``edges`` is a tuple of ``(i, j)`` with ``i < j``, sorted
    lexicographically; every per-edge array in the package is aligned with
    this order.
    """

    n: int
    edges: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"need at least one node, got n={self.n}")
        seen = set()
        prev = None
        for e in self.edges:
            i, j = e
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge {e} out of range for n={self.n}")
            if i >= j:
                raise GraphError(f"edge {e} must satisfy i < j")
            if e in seen:
                raise GraphError(f"duplicate edge {e}")
            if prev is not None and e < prev:
                raise GraphError("edges must be sorted lexicographically")
            seen.add(e)
            prev = e

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        """Build a graph from an arbitrary edge list, orienting and sorting it.

        Self loops, duplicates (in either orientation) and out-of-range
        endpoints raise :class:`GraphError`.
        """
        canon = []
        for e in edges:
            if len(e) != 2:
                raise GraphError(f"edge {e!r} is not a pair")
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise GraphError(f"self loop at node {i}")
            canon.append((min(i, j), max(i, j)))
        if len(set(canon)) != len(canon):
            raise GraphError("duplicate edge in edge list")
        return cls(int(n), tuple(sorted(canon)))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, tuple(combinations(range(n), 2)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def dim(self) -> int:
        """Number of minimal coordinates: one per node plus one per edge."""
        return self.n + len(self.edges)

    @cached_property
    def edge_array(self) -> np.ndarray:
        return np.array(self.edges, dtype=np.int64).reshape(-1, 2)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edge_array.ravel(), minlength=self.n).astype(np.int64)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nb: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nb[i].append(j)
            nb[j].append(i)
        return tuple(tuple(sorted(x)) for x in nb)

    def is_tree(self) -> bool:
        """True for forests: no cycles (connectivity is not required)."""
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, j in self.edges:
            ri, rj = find(i), find(j)
            if ri == rj:
                return False
            parent[ri] = rj
        return True

    def check_same(self, other: "Graph") -> None:
        if self != other:
            raise GraphMismatchError("objects are defined on different graphs")

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}
