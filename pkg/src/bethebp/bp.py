"""Damped synchronous sum-product BP for pairwise binary models.

Only factor-to-node messages are stored. Directed message ``2k`` runs from
edge ``k = (i, j)`` to node ``i`` and ``2k + 1`` to node ``j``; each is a
normalized pair ``(m(+1), m(-1))``. Local fields enter through node-to-factor
messages, which are rebuilt on the fly every sweep.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import BPOverflowError
from .pseudomarginal import Pseudomarginals

# kernel status codes
_OK = 0
_OVERFLOW = 1


@dataclass(frozen=True)
class BPOptions:
    damping_tau: float = 5.0
    tol: float = 1e-9
    max_iters: int = 50000

    @property
    def damping(self) -> float:
        """Weight ``a`` on the previous message; ``tau <= 0`` disables damping."""
        return float(np.exp(-1.0 / self.damping_tau)) if self.damping_tau > 0 else 0.0

    def to_json(self) -> dict:
        return {"damping_tau": self.damping_tau, "tol": self.tol, "max_iters": self.max_iters}


@dataclass(frozen=True, eq=False)
class BPResult:
    beliefs: Pseudomarginals
    converged: bool
    iterations: int
    final_delta: float
    messages: np.ndarray

    def to_json(self) -> dict:
        return {
            "beliefs": self.beliefs.to_json(),
            "converged": self.converged,
            "iterations": self.iterations,
            "final_delta": self.final_delta,
        }


def uniform_messages(graph) -> np.ndarray:
    return np.full((2 * graph.n_edges, 2), 0.5)


def random_messages(graph, rng: np.random.Generator) -> np.ndarray:
    m = rng.uniform(0.05, 0.95, size=2 * graph.n_edges)
    return np.stack([m, 1.0 - m], axis=1)


def _endpoints(graph):
    e = graph.edge_array
    dst = np.empty(2 * len(e), dtype=np.int64)
    src = np.empty(2 * len(e), dtype=np.int64)
    dst[0::2], src[0::2] = e[:, 0], e[:, 1]
    dst[1::2], src[1::2] = e[:, 1], e[:, 0]
    return src, dst


@numba.njit(cache=True, nogil=True)
def _bp_kernel(h, tJ, src, msgs, a, tol, max_iters):
    """Synchronous damped sweeps, updating ``msgs`` in place.

    Works with message log-ratios ``log(m(+1)/m(-1))``: the cavity field into
    edge ``k`` from node ``s`` is ``2 h_s`` plus every incoming log-ratio at
    ``s`` except the one sent back along ``k`` (message ``d ^ 1``), and the
    undamped outgoing message is ``(1 + tanh(J) tanh(cavity / 2)) / 2``.
    """
    n = h.shape[0]
    nd = msgs.shape[0]
    if nd == 0:
        return 0, 0.0, True, _OK
    ratio = np.empty(nd)
    tot = np.empty(n)
    for d in range(nd):
        ratio[d] = np.log(msgs[d, 0] / msgs[d, 1])
    delta = np.inf
    for it in range(1, max_iters + 1):
        for i in range(n):
            tot[i] = 2.0 * h[i]
        # message d ^ 1 is delivered to src[d]
        for d in range(nd):
            tot[src[d ^ 1]] += ratio[d]
        delta = 0.0
        for d in range(nd):
            cav = tot[src[d]] - ratio[d ^ 1]
            u = 0.5 * (1.0 + tJ[d >> 1] * np.tanh(0.5 * cav))
            p = a * msgs[d, 0] + (1.0 - a) * u
            m = a * msgs[d, 1] + (1.0 - a) * (1.0 - u)
            z = p + m
            p /= z
            m /= z
            if not (p > 0.0 and m > 0.0 and np.isfinite(p) and np.isfinite(m)):
                return it, np.inf, False, _OVERFLOW
            dd = max(abs(p - msgs[d, 0]), abs(m - msgs[d, 1]))
            if dd > delta:
                delta = dd
            msgs[d, 0] = p
            msgs[d, 1] = m
        # ratios are refreshed only after the sweep: updates are synchronous
        for d in range(nd):
            ratio[d] = np.log(msgs[d, 0] / msgs[d, 1])
        if delta < tol:
            return it, delta, True, _OK
    return max_iters, delta, False, _OK


def _beliefs(h, J, src, dst, msgs, n, n_edges):
    logm = np.log(msgs)
    tot = np.stack([h, -h], axis=1).copy()
    np.add.at(tot, dst, logm)
    qi = 1.0 / (1.0 + np.exp(tot[:, 1] - tot[:, 0]))
    cav = tot[src] - logm[np.arange(len(src)) ^ 1]
    # cav[2k] comes from node j of edge k, cav[2k + 1] from node i
    ci, cj = cav[1::2], cav[0::2]
    cells = np.stack([
        J + ci[:, 0] + cj[:, 0],   # ++
        -J + ci[:, 0] + cj[:, 1],  # +-
        -J + ci[:, 1] + cj[:, 0],  # -+
        J + ci[:, 1] + cj[:, 1],   # --
    ], axis=1)
    cells = np.exp(cells - cells.max(axis=1, keepdims=True))
    cells /= cells.sum(axis=1, keepdims=True)
    return qi, cells


def beliefs_from_messages(model, messages) -> Pseudomarginals:
    """Node and pair beliefs from a message set.

    Pair beliefs are reported by their ``++`` cell only. The node beliefs
    agree with the pair marginals only at fixed points; mid-run message sets
    can give locally inconsistent output.
    """
    msgs = np.asarray(messages, dtype=float)
    g = model.graph
    if msgs.shape != (2 * g.n_edges, 2):
        raise ValueError(f"message array has shape {msgs.shape}, expected {(2 * g.n_edges, 2)}")
    src, dst = _endpoints(g)
    qi, cells = _beliefs(model.h, model.J, src, dst, msgs, g.n, g.n_edges)
    if not (np.all(np.isfinite(qi)) and np.all(np.isfinite(cells))):
        raise BPOverflowError("zero or non-finite belief normalizer")
    return Pseudomarginals(g, qi, cells[:, 0])


def run_bp(model, options: BPOptions | None = None, init=None) -> BPResult:
    """Run damped synchronous BP from uniform (default) or given messages.

    Non-convergence within ``max_iters`` is reported through
    ``converged=False``; non-finite messages raise :class:`BPOverflowError`.
    """
    options = options or BPOptions()
    g = model.graph
    if init is None or (isinstance(init, str) and init == "uniform"):
        msgs = uniform_messages(g)
    else:
        msgs = np.array(init, dtype=float)
        if msgs.shape != (2 * g.n_edges, 2):
            raise ValueError(f"init messages have shape {msgs.shape}")
        msgs /= msgs.sum(axis=1, keepdims=True)
    src, _ = _endpoints(g)
    its, delta, conv, status = _bp_kernel(
        model.h, np.tanh(model.J), src, msgs, options.damping, options.tol, int(options.max_iters)
    )
    if status == _OVERFLOW:
        raise BPOverflowError(f"non-finite or zero message at iteration {its}")
    beliefs = beliefs_from_messages(model, msgs)
    return BPResult(beliefs, bool(conv), int(its), float(delta), msgs)
