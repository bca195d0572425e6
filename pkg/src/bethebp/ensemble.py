"""Ensemble BP: average BP fixed points over a set of parameters."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bp import BPOptions, run_bp
from .errors import GraphMismatchError, NoConvergedError
from .graph import Graph
from .learning import LearningTrajectory
from .model import IsingModel
from .pseudomarginal import Pseudomarginals


def average_beliefs(beliefs) -> Pseudomarginals:
    """Coordinate-wise mean in ``(q_i^+, q_ij^++)`` coordinates.

    The moment map is affine, so this equals averaging moments.
    """
    beliefs = list(beliefs)
    if not beliefs:
        raise ValueError("cannot average an empty list")
    g = beliefs[0].graph
    for b in beliefs[1:]:
        if b.graph != g:
            raise GraphMismatchError("beliefs are on different graphs")
    # summed in list order so threaded callers get identical results
    v = np.zeros(g.dim)
    for b in beliefs:
        v += b.vector()
    return Pseudomarginals.from_vector(g, v / len(beliefs))


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    beliefs: Pseudomarginals
    n_used: int
    n_excluded: int
    sample_beliefs: np.ndarray | None = None
    sample_converged: np.ndarray | None = None

    def to_json(self) -> dict:
        return {"beliefs": self.beliefs.to_json(), "n_used": self.n_used,
                "n_excluded": self.n_excluded}


def ebp_exact(trajectory: LearningTrajectory, last: int = 100) -> EnsembleResult:
    """Average the converged beliefs of the final ``last`` learning steps."""
    if last < 1 or last > len(trajectory):
        raise ValueError(f"last must be in [1, {len(trajectory)}], got {last}")
    tail = trajectory.tail(last)
    idx = np.flatnonzero(tail.converged)
    if idx.size == 0:
        raise NoConvergedError("no converged BP run in the averaging window")
    avg = average_beliefs(tail.beliefs(t) for t in idx)
    return EnsembleResult(avg, int(idx.size), int(last - idx.size))


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Gaussian over concatenated ``(h, J)`` with a truncated eigenbasis.

    ``factors`` has one row per retained principal direction; sampling uses
    ``theta_mean + sum_r sqrt(eigvals[r]) z_r factors[r]``.
    """

    graph: Graph
    theta_mean: np.ndarray
    covariance: np.ndarray
    eigvals: np.ndarray
    factors: np.ndarray
    explained: float

    @property
    def rank(self) -> int:
        return len(self.eigvals)

    def to_json(self) -> dict:
        return {
            "theta_mean": self.theta_mean.tolist(),
            "covariance": self.covariance.tolist(),
            "eigvals": self.eigvals.tolist(),
            "factors": self.factors.tolist(),
            "explained": self.explained,
        }


def fit_gaussian(trajectory: LearningTrajectory, last: int = 100,
                 variance_fraction: float = 0.99, max_rank: int = 2) -> EnsembleSpec:
    """Mean and unbiased covariance of the last ``last`` parameter vectors.

    Keeps the fewest leading eigenpairs whose share of the total variance
    reaches ``variance_fraction``, never more than ``max_rank``.
    """
    if last < 2 or last > len(trajectory):
        raise ValueError(f"last must be in [2, {len(trajectory)}], got {last}")
    th = trajectory.tail(last).theta
    mean = th.mean(axis=0)
    cov = np.cov(th, rowvar=False, ddof=1).reshape(len(mean), len(mean))
    cov = 0.5 * (cov + cov.T)
    w, V = np.linalg.eigh(cov)
    w, V = w[::-1], V[:, ::-1]
    w = np.clip(w, 0.0, None)
    total = float(w.sum())
    dim = len(mean)
    if total <= 1e-14 * max(1.0, float(np.max(np.abs(th)))) ** 2:
        return EnsembleSpec(trajectory.graph, mean, np.zeros((dim, dim)), np.zeros(0),
                            np.zeros((0, dim)), 1.0)
    frac = np.cumsum(w) / total
    rank = int(np.searchsorted(frac, variance_fraction - 1e-12) + 1)
    rank = min(rank, max_rank, int(np.sum(w > 0)))
    factors = V[:, :rank].T.copy()
    # deterministic sign convention
    for r in range(rank):
        if factors[r, np.argmax(np.abs(factors[r]))] < 0:
            factors[r] *= -1
    explained = float(frac[rank - 1]) if rank else 0.0
    return EnsembleSpec(trajectory.graph, mean, cov, w[:rank].copy(), factors, explained)


def sample_thetas(spec: EnsembleSpec, n_samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, spec.rank))
    return spec.theta_mean + (z * np.sqrt(spec.eigvals)) @ spec.factors


def ebp_gaussian(spec: EnsembleSpec, n_samples: int = 200, seed: int = 0,
                 bp_options: BPOptions | None = None, threads: int = 1,
                 graph: Graph | None = None) -> EnsembleResult:
    """Average BP beliefs over parameters drawn from the fitted Gaussian.

    Non-converged samples are dropped from the mean and counted in
    ``n_excluded``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    g = spec.graph if graph is None else graph
    g.check_same(spec.graph)
    thetas = sample_thetas(spec, n_samples, seed)
    n = g.n

    def one(theta):
        return run_bp(IsingModel(g, theta[:n], theta[n:]), bp_options)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(one, thetas))
    else:
        results = [one(t) for t in thetas]
    conv = np.array([r.converged for r in results], dtype=bool)
    if not conv.any():
        raise NoConvergedError("no Gaussian sample produced a converged BP run")
    avg = average_beliefs(r.beliefs for r, c in zip(results, conv) if c)
    B = np.array([r.beliefs.vector() for r in results])
    return EnsembleResult(avg, int(conv.sum()), int((~conv).sum()), B, conv)


def monte_carlo_stderr(result: EnsembleResult) -> np.ndarray:
    """Per-coordinate standard error of the ensemble mean."""
    B = result.sample_beliefs[result.sample_converged]
    if len(B) < 2:
        return np.full(B.shape[1], math.inf)
    return B.std(axis=0, ddof=1) / np.sqrt(len(B))
