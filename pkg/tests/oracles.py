"""Independent reference computations used by the tests.

Nothing here calls the code under test for the quantity being checked.
"""
from itertools import product

import numpy as np

from bethebp.graph import Graph
from bethebp.pseudomarginal import Pseudomarginals


def brute_force(n, edges, h, J):
    """Exact (log Z, q_i^+, q_ij^++, entropy) by direct enumeration."""
    states = np.array(list(product([-1, 1], repeat=n)), dtype=float)
    e = np.array(edges, dtype=int).reshape(-1, 2)
    logw = states @ np.asarray(h, float)
    if len(e):
        logw = logw + (states[:, e[:, 0]] * states[:, e[:, 1]]) @ np.asarray(J, float)
    mx = logw.max()
    w = np.exp(logw - mx)
    Z = w.sum()
    P = w / Z
    qi = P @ (states > 0)
    qij = np.array([P @ ((states[:, i] > 0) & (states[:, j] > 0)) for i, j in e])
    entropy = -np.sum(P * np.log(P))
    return mx + np.log(Z), qi, qij, entropy


def central_diff(f, x, step):
    x = np.asarray(x, float)
    g = np.zeros_like(x)
    for k in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[k] += step
        xm[k] -= step
        g[k] = (f(xp) - f(xm)) / (2 * step)
    return g


def central_jacobian(f, x, step):
    x = np.asarray(x, float)
    cols = []
    for k in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[k] += step
        xm[k] -= step
        cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * step))
    return np.array(cols).T


def random_graph(n, rng, p=0.6, loopy=False):
    """Erdos-Renyi graph; with ``loopy`` a triangle on nodes 0-2 is forced."""
    edges = {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p}
    if loopy and n >= 3:
        edges |= {(0, 1), (0, 2), (1, 2)}
    return Graph.from_edges(n, edges)


def random_interior(graph, rng, margin=0.05):
    """A random point strictly inside the local polytope (not necessarily realizable)."""
    qi = rng.uniform(0.1, 0.9, size=graph.n)
    e = graph.edge_array
    a, b = qi[e[:, 0]], qi[e[:, 1]]
    lo = np.maximum(0.0, a + b - 1.0)
    hi = np.minimum(a, b)
    width = hi - lo
    qij = lo + width * rng.uniform(margin, 1 - margin, size=len(e))
    return Pseudomarginals(graph, qi, qij)


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))
