import numpy as np
import pytest
from hypothesis import given, strategies as st

from bethebp.errors import BetheBPError, BoundaryError, InconsistentError, NotSymmetricError
from bethebp.graph import Graph
from bethebp.model import IsingModel, exact_marginals, random_tree, rho_closed_form, symmetric_four_node
from bethebp.pseudomarginal import Pseudomarginals, bethe_free_energy_gradient
from bethebp.spectral import (Believability, bethe_hessian, classify, is_believable, jacobi_eigh,
                              min_eigenpair, symmetric_vector, theorem1_eigenvector)

from oracles import central_jacobian, random_graph, random_interior, rel_err

K4 = Graph.complete(4)


def sym_marginals(rho):
    return Pseudomarginals(K4, [0.5] * 4, [rho] * 6)


def test_single_edge_uniform_hessian():
    H = bethe_hessian(Pseudomarginals.uniform(Graph(2, ((0, 1),)))).matrix
    np.testing.assert_allclose(H, [[8, 4, -8], [4, 8, -8], [-8, -8, 16]], atol=1e-12)


def test_hessian_symmetric(rng):
    g = random_graph(6, rng, p=0.7, loopy=True)
    for _ in range(50):
        H = bethe_hessian(random_interior(g, rng)).matrix
        np.testing.assert_allclose(H, H.T, atol=1e-12)


def test_hessian_matches_gradient_finite_differences(rng):
    for k in range(20):
        g = random_graph(int(rng.integers(2, 7)), rng, loopy=k % 2 == 0)
        m = IsingModel(g, np.zeros(g.n), np.zeros(g.n_edges))
        q = random_interior(g, rng, margin=0.1)
        fd = central_jacobian(
            lambda v: bethe_free_energy_gradient(m, Pseudomarginals.from_vector(g, v)), q.vector(), 1e-5)
        assert rel_err(bethe_hessian(q).matrix, fd) < 1e-4


def test_hessian_sparsity_pattern():
    g = Graph(4, ((0, 1), (1, 2), (2, 3)))
    H = bethe_hessian(random_interior(g, np.random.default_rng(1))).matrix
    # nodes 0 and 2 are not adjacent; edge (2,3) does not touch node 0
    assert H[0, 2] == 0 and H[0, 4 + 2] == 0
    # distinct edges never couple directly
    assert H[4, 5] == 0


def test_hessian_rejects_boundary():
    with pytest.raises(BoundaryError):
        bethe_hessian(Pseudomarginals(Graph(2, ((0, 1),)), [0.5, 0.5], [0.5]))


def test_min_eigenpair_basic():
    r = min_eigenpair(np.eye(3))
    assert r.lambda_min == pytest.approx(1.0)
    r = min_eigenpair(np.diag([2.0, -1.0, 5.0]))
    assert r.lambda_min == pytest.approx(-1.0)
    np.testing.assert_allclose(np.abs(r.eigvec), [0, 1, 0], atol=1e-14)


def test_min_eigenpair_rejects_nonsymmetric():
    with pytest.raises(NotSymmetricError):
        min_eigenpair(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotSymmetricError):
        min_eigenpair(np.ones((2, 3)))


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_eigenpair_residual_contract(rng, method):
    g = random_graph(6, rng, p=0.8, loopy=True)
    for _ in range(10):
        H = bethe_hessian(random_interior(g, rng)).matrix
        r = min_eigenpair(H, method=method)
        assert np.linalg.norm(r.eigvec) == pytest.approx(1.0, abs=1e-14)
        assert np.max(np.abs(H @ r.eigvec - r.lambda_min * r.eigvec)) < 1e-8 * max(1, abs(r.lambda_min))


def test_jacobi_agrees_with_lapack(rng):
    for _ in range(5):
        A = rng.normal(size=(12, 12))
        A = A + A.T
        w, V, sweeps = jacobi_eigh(A)
        np.testing.assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-10)
        assert sweeps > 0
        np.testing.assert_allclose(V.T @ V, np.eye(12), atol=1e-12)


def test_rayleigh_upper_bound(rng):
    g = random_graph(6, rng, p=0.8, loopy=True)
    H = bethe_hessian(random_interior(g, rng)).matrix
    lam = min_eigenpair(H).lambda_min
    X = rng.normal(size=(1000, g.dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    quotients = np.einsum("ij,jk,ik->i", X, H, X)
    assert np.all(lam <= quotients + 1e-12)


def test_threshold_hessian_singular():
    r = min_eigenpair(bethe_hessian(sym_marginals(0.375)))
    assert abs(r.lambda_min) < 1e-8
    assert is_believable(sym_marginals(0.375)).classification == Believability.BOUNDARY


def test_four_node_classification():
    p = exact_marginals(symmetric_four_node(0.25))
    assert p.qij_pp[0] == pytest.approx(0.34404554618045694, abs=1e-12)
    assert is_believable(p).classification == Believability.BELIEVABLE
    p = exact_marginals(symmetric_four_node(0.4))
    assert p.qij_pp[0] == pytest.approx(0.41147061818703433, abs=1e-12)
    assert is_believable(p).classification == Believability.UNBELIEVABLE


def test_classify_band():
    assert classify(1e-10) == Believability.BOUNDARY
    assert classify(-2e-9) == Believability.UNBELIEVABLE
    assert classify(2e-9) == Believability.BELIEVABLE


def test_inconsistent_rejected():
    with pytest.raises(InconsistentError):
        is_believable(Pseudomarginals(Graph(2, ((0, 1),)), [0.9, 0.9], [0.5]))


def test_tree_truth_believable(rng):
    for _ in range(10):
        n = int(rng.integers(2, 10))
        g = random_tree(n, rng)
        m = IsingModel(g, rng.normal(size=n), rng.normal(size=n - 1))
        assert is_believable(exact_marginals(m)).classification == Believability.BELIEVABLE


@given(st.integers(0, 10_000))
def test_trees_convex_everywhere(seed):
    rng = np.random.default_rng(seed)
    g = random_tree(int(rng.integers(2, 9)), rng)
    assert min_eigenpair(bethe_hessian(random_interior(g, rng, margin=0.01))).lambda_min > 0


@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_classification_relabel_invariant(seed, rnd):
    rng = np.random.default_rng(seed)
    n = 5
    g = random_graph(n, rng, p=0.8, loopy=True)
    q = random_interior(g, rng)
    perm = list(range(n))
    rnd.shuffle(perm)
    g2 = Graph.from_edges(n, [(perm[i], perm[j]) for i, j in g.edges])
    lookup = {(min(perm[i], perm[j]), max(perm[i], perm[j])): v for (i, j), v in zip(g.edges, q.qij_pp)}
    q2 = Pseudomarginals(g2, q.qi_plus[np.argsort(perm)], [lookup[e] for e in g2.edges])
    a, b = is_believable(q), is_believable(q2)
    assert a.lambda_min == pytest.approx(b.lambda_min, abs=1e-9)
    assert a.classification == b.classification


def test_symmetric_family_single_sign_change():
    rhos = np.linspace(0.25, 0.49, 2401)
    lam = np.array([min_eigenpair(bethe_hessian(sym_marginals(r))).lambda_min for r in rhos])
    # rho = 0.25 exactly is the independent point; sign changes once, at 3/8
    s = np.sign(lam[np.abs(lam) > 1e-9])
    assert np.sum(s[1:] != s[:-1]) == 1
    cross = rhos[np.argmax(lam < 0)]
    assert abs(cross - 0.375) <= 1e-4 + 1e-12
    lo = max(r for r, l in zip(rhos, lam) if l > 0)
    hi = min(r for r, l in zip(rhos, lam) if l < 0)
    assert lo <= 0.375 + 1e-6 and hi >= 0.375 - 1e-6


def test_symmetric_negative_direction():
    H = bethe_hessian(sym_marginals(0.375)).matrix
    u = symmetric_vector(*theorem1_eigenvector(0.375))
    assert np.max(np.abs(H @ u)) < 1e-8
    rho = rho_closed_form(0.5)
    u = symmetric_vector(*theorem1_eigenvector(rho))
    H = bethe_hessian(sym_marginals(rho)).matrix
    assert u @ H @ u < 0
    # it is the eigenvector of the lowest eigenvalue
    assert u @ H @ u == pytest.approx(min_eigenpair(H).lambda_min, abs=1e-10)
    u = symmetric_vector(*theorem1_eigenvector(0.30))
    assert u @ bethe_hessian(sym_marginals(0.30)).matrix @ u > 0
    assert theorem1_eigenvector(0.3)[1] == 1.0


@pytest.mark.parametrize("rho", [0.2, 0.5, 0.7])
def test_negative_direction_domain(rho):
    with pytest.raises(BetheBPError):
        theorem1_eigenvector(rho)


def test_believability_json():
    d = is_believable(sym_marginals(0.3)).to_json()
    assert set(d) == {"lambda_min", "classification", "eigvec"}
    assert d["classification"] == "believable" and len(d["eigvec"]) == 10
