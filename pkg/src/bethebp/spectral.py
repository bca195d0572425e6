"""Bethe Hessian assembly and believability classification."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BetheBPError, NotSymmetricError
from .graph import Graph
from .pseudomarginal import Pseudomarginals, interior_cells, require_consistent

DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BetheHessian:
    """Second derivative of the Bethe free energy; rows are nodes then edges."""

    graph: Graph
    matrix: np.ndarray

    def index_of_node(self, i: int) -> int:
        return i

    def index_of_edge(self, k: int) -> int:
        return self.graph.n + k


@dataclass(frozen=True, eq=False)
class SpectralResult:
    lambda_min: float
    eigvec: np.ndarray
    iterations: int


class Believability(str, Enum):
    BELIEVABLE = "believable"
    UNBELIEVABLE = "unbelievable"
    BOUNDARY = "boundary"


@dataclass(frozen=True, eq=False)
class BelievabilityResult:
    classification: Believability
    spectral: SpectralResult

    @property
    def lambda_min(self) -> float:
        return self.spectral.lambda_min

    def to_json(self) -> dict:
        return {
            "lambda_min": self.spectral.lambda_min,
            "classification": self.classification.value,
            "eigvec": self.spectral.eigvec.tolist(),
        }


def bethe_hessian(q: Pseudomarginals, graph: Graph | None = None) -> BetheHessian:
    """Assemble the Hessian in closed form at an interior pseudomarginal."""
    g = q.graph
    if graph is not None:
        graph.check_same(g)
    qi, (pp, pm, mp, mm) = interior_cells(q)
    n, e = g.n, g.edge_array
    a, b = e[:, 0], e[:, 1]
    k = np.arange(len(e))
    H = np.zeros((g.dim, g.dim))

    H[np.arange(n), np.arange(n)] = (1 - g.degrees) * (1.0 / qi + 1.0 / (1.0 - qi))
    # pair cells (+-) seen from i and (-+) seen from j, both with (--)
    from_i = 1.0 / pm + 1.0 / mm
    from_j = 1.0 / mp + 1.0 / mm
    np.add.at(H, (a, a), from_i)
    np.add.at(H, (b, b), from_j)
    H[a, b] += 1.0 / mm
    H[b, a] += 1.0 / mm
    H[a, n + k] = H[n + k, a] = -from_i
    H[b, n + k] = H[n + k, b] = -from_j
    H[n + k, n + k] = 1.0 / pp + 1.0 / pm + 1.0 / mp + 1.0 / mm
    return BetheHessian(g, H)


def _as_matrix(H) -> np.ndarray:
    M = H.matrix if isinstance(H, BetheHessian) else np.asarray(H, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NotSymmetricError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
        raise NotSymmetricError("matrix is not symmetric")
    return M


def jacobi_eigh(M, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi rotations; returns ``(eigenvalues, eigenvectors, sweeps)``.

    Stops once the off-diagonal Frobenius norm falls below ``tol`` times the
    matrix norm. Slower than LAPACK; kept as an independent route.
    """
    A = np.array(M, dtype=float)
    m = A.shape[0]
    V = np.eye(m)
    norm = max(np.linalg.norm(A), 1e-300)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * norm:
            sweeps -= 1
            break
        for p in range(m - 1):
            for r in range(p + 1, m):
                apr = A[p, r]
                if abs(apr) < 1e-300:
                    continue
                tau = (A[r, r] - A[p, p]) / (2.0 * apr)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                Ap, Ar = A[:, p].copy(), A[:, r].copy()
                A[:, p] = c * Ap - s * Ar
                A[:, r] = s * Ap + c * Ar
                Ap, Ar = A[p, :].copy(), A[r, :].copy()
                A[p, :] = c * Ap - s * Ar
                A[r, :] = s * Ap + c * Ar
                Vp, Vr = V[:, p].copy(), V[:, r].copy()
                V[:, p] = c * Vp - s * Vr
                V[:, r] = s * Vp + c * Vr
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order], sweeps


def min_eigenpair(H, method: str = "lapack") -> SpectralResult:
    """Smallest eigenvalue and a unit eigenvector of a dense symmetric matrix.

    ``method="lapack"`` calls :func:`numpy.linalg.eigh` (``iterations`` is 0);
    ``method="jacobi"`` uses :func:`jacobi_eigh` and reports sweeps.
    """
    M = _as_matrix(H)
    if method == "lapack":
        w, V = np.linalg.eigh(M)
        its = 0
    elif method == "jacobi":
        w, V, its = jacobi_eigh(M)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    v = V[:, 0] / np.linalg.norm(V[:, 0])
    # fix the sign so results are reproducible across solvers
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return SpectralResult(float(w[0]), v, its)


def classify(lambda_min: float, tol: float = DEFAULT_TOL) -> Believability:
    if lambda_min < -tol:
        return Believability.UNBELIEVABLE
    if lambda_min > tol:
        return Believability.BELIEVABLE
    return Believability.BOUNDARY


def is_believable(p: Pseudomarginals, graph: Graph | None = None,
                  tol: float = DEFAULT_TOL) -> BelievabilityResult:
    """Classify target marginals by the sign of the Bethe Hessian's lowest eigenvalue.

    A negative eigenvalue means no parameters make ``p`` a local minimum of the
    Bethe free energy, so no BP run can converge stably to it. A positive one
    is necessary for reachability but not a guarantee.
    """
    require_consistent(p)
    res = min_eigenpair(bethe_hessian(p, graph))
    return BelievabilityResult(classify(res.lambda_min, tol), res)


def theorem1_eigenvector(rho: float) -> tuple[float, float]:
    """Closed-form symmetric direction for the 4-node example at pair value ``rho``.

    Returns ``(u_node, u_edge)`` before normalization, with ``u_edge = 1``.
    """
    if not (0.25 <= rho < 0.5):
        raise BetheBPError(f"rho must lie in [1/4, 1/2), got {rho}")
    disc = 10 - 28 * rho + 81 * rho**2 - 112 * rho**3 + 64 * rho**4
    return 0.5 * (-2 + 7 * rho - 8 * rho**2 + np.sqrt(disc)), 1.0


def symmetric_vector(u_node: float, u_edge: float, graph: Graph | None = None) -> np.ndarray:
    """Expand ``(u_node, u_edge)`` to a full unit vector on the complete 4-node graph."""
    graph = graph or Graph.complete(4)
    u = np.concatenate([np.full(graph.n, u_node), np.full(graph.n_edges, u_edge)])
    return u / np.linalg.norm(u)
