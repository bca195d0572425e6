"""Experiment protocols: unbelievable-fraction sweep, five-model comparison,
trajectory projection, plus the metrics and CSV writers they share."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bp import BPOptions, run_bp
from .ensemble import ebp_exact, ebp_gaussian, fit_gaussian
from .errors import NoConvergedError
from .learning import LearnOptions, LearningTrajectory, best_beliefs, bethe_wake_sleep, pseudo_moment_matching
from .model import RNG_ALGORITHM, IsingModel, exact_marginals, generate_random_ising, trial_seed
from .pseudomarginal import Pseudomarginals, bethe_free_energy
from .spectral import Believability, is_believable

MODEL_TAGS = ("i", "ii", "iii", "iv", "v")
# extra seed component for Gaussian-ensemble draws
_GAUSS_STREAM = 0x6A55


@dataclass(frozen=True)
class Metrics:
    bethe_divergence: float
    euclidean_distance: float


def metrics(p: Pseudomarginals, b: Pseudomarginals, model: IsingModel) -> Metrics:
    """Bethe divergence ``F[p] - F[b]`` under ``model`` and ``|p - b|_2``."""
    p.graph.check_same(b.graph)
    model.graph.check_same(p.graph)
    d = bethe_free_energy(model, p) - bethe_free_energy(model, b)
    return Metrics(float(d), float(np.linalg.norm(p.vector() - b.vector())))


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(rows, columns, metadata: dict | None = None) -> str:
    """CSV text with an optional ``#``-prefixed JSON metadata line."""
    buf = io.StringIO()
    if metadata is not None:
        buf.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def csv_body(text: str) -> str:
    """Strip metadata comment lines."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


# ---------------------------------------------------------------- sweep

@dataclass(frozen=True)
class SweepRecord:
    sigma_j: float
    trials: int
    n_unbelievable: int
    n_boundary: int

    @property
    def fraction(self) -> float:
        return self.n_unbelievable / self.trials if self.trials else 0.0

    def row(self) -> dict:
        return {**asdict(self), "fraction": self.fraction}


SWEEP_COLUMNS = ("sigma_j", "trials", "n_unbelievable", "n_boundary", "fraction")


def sweep_unbelievable_fraction(n: int = 8, sigma_j_grid=(1 / 3,), sigma_h: float = 1 / 3,
                                trials: int = 500, base_seed: int = 0,
                                threads: int = 1) -> list[SweepRecord]:
    """Fraction of random fully connected models whose exact marginals are unbelievable.

    Trial ``t`` uses seed ``trial_seed(base_seed, t)`` at every grid point, so
    the grid shares common random numbers. Boundary cases count as believable
    and are tallied separately.
    """
    grid = [float(s) for s in sigma_j_grid]
    if not grid:
        raise ValueError("sigma_j grid is empty")

    def classify_trial(item):
        sj, t = item
        m = generate_random_ising(n, sigma_h, sj, "full", seed=trial_seed(base_seed, t))
        return is_believable(exact_marginals(m)).classification

    items = [(sj, t) for sj in grid for t in range(trials)]
    labels = _map(classify_trial, items, threads)
    out = []
    for gi, sj in enumerate(grid):
        chunk = labels[gi * trials : (gi + 1) * trials]
        out.append(SweepRecord(
            sj, trials,
            sum(c == Believability.UNBELIEVABLE for c in chunk),
            sum(c == Believability.BOUNDARY for c in chunk),
        ))
    return out


# ---------------------------------------------------------------- comparison

@dataclass(frozen=True)
class CompareOptions:
    learn: LearnOptions = field(default_factory=LearnOptions)
    last: int = 100
    n_samples: int = 200
    max_rank: int = 2
    variance_fraction: float = 0.99
    max_attempts: int = 1

    def to_json(self) -> dict:
        d = asdict(self)
        d["learn"] = self.learn.to_json()
        return d


@dataclass(frozen=True)
class ComparisonRecord:
    trial: int
    model: str
    bethe_divergence: float
    euclidean_distance: float
    bp_converged_frac: float


COMPARE_COLUMNS = ("trial", "model", "bethe_divergence", "euclidean_distance", "bp_converged_frac")


@dataclass
class ComparisonResult:
    records: list[ComparisonRecord]
    skipped_trials: list[int]
    targets: dict = field(default_factory=dict)

    def summary(self) -> dict:
        """Per-model quartiles (25/50/75) of both metrics, NaNs ignored."""
        out = {}
        for tag in MODEL_TAGS:
            rows = [r for r in self.records if r.model == tag]
            entry = {"count": len(rows)}
            for key in ("bethe_divergence", "euclidean_distance"):
                vals = np.array([getattr(r, key) for r in rows], dtype=float)
                vals = vals[np.isfinite(vals)]
                entry[key] = (np.percentile(vals, [25, 50, 75]).tolist() if vals.size
                              else [float("nan")] * 3)
            out[tag] = entry
        out["skipped_trials"] = list(self.skipped_trials)
        return out

    def medians(self, key: str = "euclidean_distance") -> dict:
        s = self.summary()
        return {tag: s[tag][key][1] for tag in MODEL_TAGS}


def _select_target(trial: int, n, sigma_h, sigma_j, base_seed, max_attempts):
    for attempt in range(max_attempts):
        seed = trial_seed(base_seed, trial) if attempt == 0 else trial_seed(base_seed, trial, attempt)
        model = generate_random_ising(n, sigma_h, sigma_j, "full", seed=seed)
        p = exact_marginals(model)
        if is_believable(p).classification == Believability.UNBELIEVABLE:
            return model, p
    return None


def compare_target(trial: int, model: IsingModel, p: Pseudomarginals, options: CompareOptions,
                   base_seed: int = 0) -> tuple[list[ComparisonRecord], LearningTrajectory]:
    """Evaluate the five parameter choices on one target."""
    bp_opts = options.learn.bp
    nan = float("nan")
    recs = []

    def add(tag, b, theta_model, frac):
        if b is None:
            recs.append(ComparisonRecord(trial, tag, nan, nan, frac))
            return
        m = metrics(p, b, theta_model)
        recs.append(ComparisonRecord(trial, tag, m.bethe_divergence, m.euclidean_distance, frac))

    r = run_bp(model, bp_opts)
    add("i", r.beliefs, model, float(r.converged))

    pmm = pseudo_moment_matching(p)
    r = run_bp(pmm, bp_opts)
    add("ii", r.beliefs, pmm, float(r.converged))

    traj = bethe_wake_sleep(p, options.learn)
    frac_all = float(traj.converged.mean()) if len(traj) else nan
    try:
        t_best, b_best = best_beliefs(traj, p)
        add("iii", b_best, traj.model(t_best), frac_all)
    except NoConvergedError:
        add("iii", None, None, frac_all)

    tail = traj.tail(options.last)
    theta_bar = model.with_theta(tail.theta.mean(axis=0))
    try:
        ens = ebp_exact(traj, options.last)
        add("iv", ens.beliefs, theta_bar, float(tail.converged.mean()))
    except NoConvergedError:
        add("iv", None, None, 0.0)

    spec = fit_gaussian(traj, options.last, options.variance_fraction, options.max_rank)
    try:
        g = ebp_gaussian(spec, options.n_samples, trial_seed(base_seed, trial, _GAUSS_STREAM), bp_opts)
        add("v", g.beliefs, theta_bar, g.n_used / options.n_samples)
    except NoConvergedError:
        add("v", None, None, 0.0)
    return recs, traj


def five_model_comparison(trials: int, sigma_j: float = 1 / 3, sigma_h: float = 1 / 3, n: int = 8,
                          base_seed: int = 0, options: CompareOptions | None = None,
                          threads: int = 1) -> ComparisonResult:
    """BP vs. ensemble BP on randomly generated unbelievable targets.

    Trials whose target (after ``max_attempts`` draws) is not unbelievable
    produce no records and are listed in ``skipped_trials``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    options = options or CompareOptions()

    def run_trial(t):
        sel = _select_target(t, n, sigma_h, sigma_j, base_seed, options.max_attempts)
        if sel is None:
            return t, None, None
        model, p = sel
        recs, _ = compare_target(t, model, p, options, base_seed)
        return t, recs, (model, p)

    results = sorted(_map(run_trial, range(trials), threads), key=lambda x: x[0])
    records, skipped, targets = [], [], {}
    for t, recs, tgt in results:
        if recs is None:
            skipped.append(t)
        else:
            records.extend(recs)
            targets[t] = tgt
    return ComparisonResult(records, skipped, targets)


def sweep_csv(records, metadata=None) -> str:
    return write_csv([r.row() for r in records], SWEEP_COLUMNS, metadata)


def comparison_csv(result: ComparisonResult, metadata=None) -> str:
    return write_csv([asdict(r) for r in result.records], COMPARE_COLUMNS, metadata)


def run_metadata(**kw) -> dict:
    return {"rng": RNG_ALGORITHM, **kw}


# ---------------------------------------------------------------- projection

@dataclass(frozen=True, eq=False)
class PCA:
    coords: np.ndarray
    components: np.ndarray
    explained: np.ndarray
    mean: np.ndarray


def _pca(X: np.ndarray, k: int) -> PCA:
    mean = X.mean(axis=0)
    Xc = X - mean
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    k_eff = min(k, len(s))
    var = s**2
    total = var.sum()
    explained = var[:k_eff] / total if total > 0 else np.zeros(k_eff)
    comps = Vt[:k_eff].copy()
    for r in range(k_eff):
        if comps[r, np.argmax(np.abs(comps[r]))] < 0:
            comps[r] *= -1
    coords = Xc @ comps.T
    if k_eff < k:
        pad = k - k_eff
        coords = np.hstack([coords, np.zeros((len(X), pad))])
        comps = np.vstack([comps, np.zeros((pad, X.shape[1]))])
        explained = np.concatenate([explained, np.zeros(pad)])
    return PCA(coords, comps, explained, mean)


@dataclass(frozen=True, eq=False)
class TrajectoryProjection:
    theta: PCA
    beliefs: PCA

    def coords_rows(self):
        k = self.theta.coords.shape[1]
        for t in range(len(self.theta.coords)):
            row = {"iter": t}
            for c in range(k):
                row[f"theta_pc{c + 1}"] = float(self.theta.coords[t, c])
            for c in range(k):
                row[f"belief_pc{c + 1}"] = float(self.beliefs.coords[t, c])
            yield row

    def coords_csv(self, metadata=None) -> str:
        k = self.theta.coords.shape[1]
        cols = ["iter"] + [f"theta_pc{c + 1}" for c in range(k)] + [f"belief_pc{c + 1}" for c in range(k)]
        return write_csv(self.coords_rows(), cols, metadata)

    def components_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["space", "component", "explained_variance", "vector"])
        for space, pca in (("theta", self.theta), ("beliefs", self.beliefs)):
            for c in range(len(pca.components)):
                w.writerow([space, c + 1, repr(float(pca.explained[c])),
                            " ".join(repr(float(v)) for v in pca.components[c])])
        return buf.getvalue()


def export_trajectory_projection(trajectory: LearningTrajectory, k: int = 2) -> TrajectoryProjection:
    """Centered PCA of the parameter and belief trajectories, each on its own."""
    if len(trajectory) < 2:
        raise ValueError("need at least two trajectory records")
    return TrajectoryProjection(_pca(trajectory.theta, k), _pca(trajectory.beliefs_matrix, k))
