"""Pseudo-moment matching and Bethe wake-sleep learning."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bp import BPOptions, random_messages, run_bp
from .errors import NoConvergedError
from .model import IsingModel
from .pseudomarginal import Pseudomarginals, interior_cells, require_consistent, to_moments

INIT_POLICIES = ("uniform", "fixed", "random", "warm")


def pseudo_moment_matching(p: Pseudomarginals, graph=None) -> IsingModel:
    """Parameters that make ``p`` a stationary point of the Bethe free energy."""
    if graph is not None:
        graph.check_same(p.graph)
    require_consistent(p)
    qi, (pp, pm, mp, mm) = interior_cells(p)
    g = p.graph
    e = g.edge_array
    J = 0.25 * np.log(pp * mm / (pm * mp))
    h = 0.5 * (1 - g.degrees) * np.log(qi / (1.0 - qi))
    np.add.at(h, e[:, 0], J + 0.5 * np.log(pm / mm))
    np.add.at(h, e[:, 1], J + 0.5 * np.log(mp / mm))
    return IsingModel(g, h, J)


@dataclass(frozen=True)
class LearnOptions:
    """Wake-sleep settings.

    ``init_policy`` picks BP's starting messages at every learning step:
    ``uniform`` (all messages 1/2), ``fixed`` (one seeded random message set
    reused each step), ``random`` (fresh seeded draw each step) or ``warm``
    (continue from the previous step's messages).
    """

    epsilon: float = 0.1
    iters: int = 2000
    theta_init: object = "pmm"
    init_policy: str = "uniform"
    seed: int = 0
    bp: BPOptions = field(default_factory=BPOptions)

    def to_json(self) -> dict:
        ti = self.theta_init
        if not isinstance(ti, str):
            ti = np.asarray(ti, dtype=float).tolist()
        return {
            "epsilon": self.epsilon,
            "iters": self.iters,
            "theta_init": ti,
            "init_policy": self.init_policy,
            "seed": self.seed,
            "bp": self.bp.to_json(),
        }


@dataclass(frozen=True, eq=False)
class LearningTrajectory:
    """Per-iteration record of a wake-sleep run.

    Row ``t`` holds the parameters BP was run with at step ``t`` and the
    beliefs it returned; ``theta_final`` is the value after the last update.
    """

    graph: object
    h: np.ndarray
    J: np.ndarray
    qi_plus: np.ndarray
    qij_pp: np.ndarray
    converged: np.ndarray
    bp_iterations: np.ndarray
    mismatch: np.ndarray
    theta_final: np.ndarray
    options: LearnOptions

    def __len__(self):
        return len(self.converged)

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.h, self.J], axis=1)

    @property
    def beliefs_matrix(self) -> np.ndarray:
        return np.concatenate([self.qi_plus, self.qij_pp], axis=1)

    @property
    def mismatch_inf(self) -> np.ndarray:
        if len(self) == 0:
            return np.zeros(0)
        return np.max(np.abs(self.mismatch), axis=1)

    def beliefs(self, t: int) -> Pseudomarginals:
        return Pseudomarginals(self.graph, self.qi_plus[t], self.qij_pp[t])

    def model(self, t: int) -> IsingModel:
        return IsingModel(self.graph, self.h[t], self.J[t])

    def tail(self, last: int) -> "LearningTrajectory":
        s = slice(len(self) - last, len(self))
        return replace(
            self, h=self.h[s], J=self.J[s], qi_plus=self.qi_plus[s], qij_pp=self.qij_pp[s],
            converged=self.converged[s], bp_iterations=self.bp_iterations[s],
            mismatch=self.mismatch[s],
        )

    def records(self):
        """JSON-ready dicts, one per iteration."""
        mi = self.mismatch_inf
        for t in range(len(self)):
            yield {
                "iter": t,
                "h": self.h[t].tolist(),
                "J": self.J[t].tolist(),
                "qi_plus": self.qi_plus[t].tolist(),
                "qij_pp": self.qij_pp[t].tolist(),
                "converged": bool(self.converged[t]),
                "mismatch_inf": float(mi[t]),
            }

    @classmethod
    def from_records(cls, graph, records, options: LearnOptions | None = None,
                     target: Pseudomarginals | None = None) -> "LearningTrajectory":
        """Rebuild from JSON-lines records; the mismatch needs ``target``."""
        records = list(records)
        n, m = graph.n, graph.n_edges

        def arr(key, width):
            return np.array([r[key] for r in records], dtype=float).reshape(len(records), width)

        qi, qij = arr("qi_plus", n), arr("qij_pp", m)
        if target is not None:
            eta_p = to_moments(target).vector()
            mism = np.array([eta_p - to_moments(Pseudomarginals(graph, a, b)).vector()
                             for a, b in zip(qi, qij)]).reshape(len(records), n + m)
        else:
            mism = np.full((len(records), n + m), np.nan)
        h, J = arr("h", n), arr("J", m)
        options = options or LearnOptions()
        final = np.concatenate([h[-1], J[-1]]) if records else np.zeros(n + m)
        if records and target is not None:
            final = final + options.epsilon * mism[-1]
        return cls(graph, h, J, qi, qij,
                   np.array([bool(r["converged"]) for r in records], dtype=bool),
                   np.zeros(len(records), dtype=np.int64), mism, final, options)


def _theta_start(p: Pseudomarginals, theta_init) -> np.ndarray:
    if isinstance(theta_init, str):
        if theta_init == "pmm":
            return pseudo_moment_matching(p).theta
        if theta_init == "zeros":
            return np.zeros(p.graph.dim)
        raise ValueError(f"unknown theta_init {theta_init!r}")
    theta = np.array(theta_init, dtype=float).reshape(-1)
    if theta.shape != (p.graph.dim,):
        raise ValueError(f"theta_init has length {theta.size}, expected {p.graph.dim}")
    return theta


def bethe_wake_sleep(p: Pseudomarginals, options: LearnOptions | None = None,
                     graph=None) -> LearningTrajectory:
    """Gradient descent on the Bethe divergence: ``theta += eps * (eta(p) - eta(b))``.

    Steps whose BP run did not converge still use the last iterate's beliefs
    and are flagged in ``converged``.
    """
    options = options or LearnOptions()
    if graph is not None:
        graph.check_same(p.graph)
    if options.epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if options.init_policy not in INIT_POLICIES:
        raise ValueError(f"unknown init_policy {options.init_policy!r}")
    require_consistent(p)
    g = p.graph
    n, T = g.n, int(options.iters)
    eta_p = to_moments(p).vector()
    theta = _theta_start(p, options.theta_init)

    rng = np.random.default_rng(options.seed)
    fixed = random_messages(g, rng) if options.init_policy == "fixed" else None
    msgs = None

    H = np.empty((T, n))
    Jr = np.empty((T, g.n_edges))
    QI = np.empty((T, n))
    QIJ = np.empty((T, g.n_edges))
    conv = np.empty(T, dtype=bool)
    bpit = np.empty(T, dtype=np.int64)
    mism = np.empty((T, g.dim))
    for t in range(T):
        model = IsingModel(g, theta[:n], theta[n:])
        if options.init_policy == "uniform":
            init = None
        elif options.init_policy == "fixed":
            init = fixed
        elif options.init_policy == "random":
            init = random_messages(g, rng)
        else:
            init = msgs
        res = run_bp(model, options.bp, init=init)
        msgs = res.messages
        b = res.beliefs
        d = eta_p - to_moments(b).vector()
        H[t], Jr[t] = theta[:n], theta[n:]
        QI[t], QIJ[t] = b.qi_plus, b.qij_pp
        conv[t], bpit[t], mism[t] = res.converged, res.iterations, d
        theta = theta + options.epsilon * d
    return LearningTrajectory(g, H, Jr, QI, QIJ, conv, bpit, mism, theta, options)


def best_beliefs(trajectory: LearningTrajectory, p: Pseudomarginals) -> tuple[int, Pseudomarginals]:
    """Converged step whose beliefs are closest to ``p`` in Euclidean distance."""
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    idx = np.flatnonzero(trajectory.converged)
    if idx.size == 0:
        raise NoConvergedError("no converged BP run in trajectory")
    dist = np.linalg.norm(trajectory.beliefs_matrix[idx] - p.vector(), axis=1)
    t = int(idx[np.argmin(dist)])
    return t, trajectory.beliefs(t)


@dataclass(frozen=True)
class EquilibriumReport:
    equilibrated: bool
    mean_mismatch_inf: float
    drift: float
    window: int


def detect_equilibrium(trajectory: LearningTrajectory, window: int,
                       mismatch_tol: float = 1e-3, drift_tol: float = 1e-2) -> EquilibriumReport:
    """Stationarity test on the final ``window`` steps.

    Equilibrated when the windowed mean moment mismatch is below
    ``mismatch_tol`` in the max norm and the mean parameters of the two halves
    of the window differ by less than ``drift_tol`` in every coordinate.
    """
    if window < 2 or window > len(trajectory):
        raise ValueError(f"window must be in [2, {len(trajectory)}], got {window}")
    tail = trajectory.tail(window)
    mean_mis = float(np.max(np.abs(tail.mismatch.mean(axis=0))))
    th = tail.theta
    half = window // 2
    drift = float(np.max(np.abs(th[:half].mean(axis=0) - th[half:].mean(axis=0))))
    ok = bool(mean_mis < mismatch_tol and drift < drift_tol)
    return EquilibriumReport(ok, mean_mis, drift, window)
