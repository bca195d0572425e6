"""Command-line entry point (``bethebp``)."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio
from .bp import BPOptions, run_bp
from .ensemble import ebp_exact, ebp_gaussian, fit_gaussian, monte_carlo_stderr
from .errors import BetheBPError
from .harness import (CompareOptions, comparison_csv, export_trajectory_projection,
                      five_model_comparison, run_metadata, sweep_csv, sweep_unbelievable_fraction)
from .learning import LearnOptions, bethe_wake_sleep, pseudo_moment_matching
from .model import exact_log_partition, exact_marginals, generate_random_ising
from .spectral import is_believable


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _floats(s: str) -> list[float]:
    out = []
    for tok in s.split(","):
        tok = tok.strip()
        if "/" in tok:
            a, b = tok.split("/")
            out.append(float(a) / float(b))
        elif tok:
            out.append(float(tok))
    return out


def _frac(s: str) -> float:
    return _floats(s)[0]


def _bp_opts(a) -> BPOptions:
    return BPOptions(damping_tau=a.damping_tau, tol=a.tol, max_iters=a.max_iters)


def _learn_opts(a) -> LearnOptions:
    theta_init = a.theta_init
    if theta_init not in ("pmm", "zeros"):
        d = fileio.load_json(theta_init)
        theta_init = list(d["h"]) + list(d["J"])
    return LearnOptions(epsilon=a.epsilon, iters=a.iters, theta_init=theta_init,
                        init_policy=a.init_policy, seed=a.seed, bp=_bp_opts(a))


def _metadata(a, **kw):
    meta = run_metadata(command=a.command, seed=a.seed, **kw)
    if getattr(a, "timestamp", False):
        meta["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    return meta


def cmd_generate(a):
    topology = "full" if a.edges is None else fileio.load_json(a.edges)
    if isinstance(topology, dict):
        topology = topology["edges"]
    m = generate_random_ising(a.n, a.sigma_h, a.sigma_j, topology, a.seed)
    _emit(fileio.dump_json(m.to_json()), a.out)


def cmd_exact(a):
    m = fileio.load_model(a.model)
    d = exact_marginals(m).to_json()
    d["log_partition"] = exact_log_partition(m)
    _emit(fileio.dump_json(d), a.out)


def cmd_bp(a):
    m = fileio.load_model(a.model)
    _emit(fileio.dump_json(run_bp(m, _bp_opts(a)).to_json()), a.out)


def _target(a, graph):
    if a.marginals:
        return fileio.load_marginals(a.marginals, graph)
    return exact_marginals(fileio.load_model(a.model))


def cmd_believability(a):
    g = fileio.load_graph(a.model)
    res = is_believable(_target(a, g), tol=a.believe_tol)
    _emit(fileio.dump_json(res.to_json()), a.out)


def cmd_pmm(a):
    g = fileio.load_graph(a.model)
    _emit(fileio.dump_json(pseudo_moment_matching(_target(a, g)).to_json()), a.out)


def cmd_learn(a):
    g = fileio.load_graph(a.model)
    p = _target(a, g)
    traj = bethe_wake_sleep(p, _learn_opts(a))
    if not a.out:
        raise ValueError("learn requires --out for the trajectory file")
    fileio.write_trajectory(traj, a.out, target=p)
    sys.stdout.write(fileio.dump_json({
        "iterations": len(traj),
        "converged_fraction": float(traj.converged.mean()) if len(traj) else None,
        "final_mismatch_inf": float(traj.mismatch_inf[-1]) if len(traj) else None,
        "trajectory": a.out,
    }))


def cmd_ebp(a):
    graph = fileio.load_graph(a.model) if a.model else None
    traj, target = fileio.read_trajectory(a.trajectory, graph)
    diag = {"last": a.last}
    if a.gaussian:
        spec = fit_gaussian(traj, a.last, a.variance_fraction, a.rank)
        res = ebp_gaussian(spec, a.samples, a.seed, _bp_opts(a), threads=a.threads)
        diag.update(mode="gaussian", rank=spec.rank, eigvals=spec.eigvals.tolist(),
                    explained=spec.explained, samples=a.samples, n_converged=res.n_used,
                    n_failed=res.n_excluded,
                    stderr_max=float(np.max(monte_carlo_stderr(res))))
    else:
        res = ebp_exact(traj, a.last)
        diag.update(mode="exact", n_used=res.n_used, n_excluded=res.n_excluded)
    if target is not None:
        diff = res.beliefs.vector() - target.vector()
        diag.update(euclidean_distance=float(np.linalg.norm(diff)),
                    max_abs_error=float(np.max(np.abs(diff))))
    _emit(fileio.dump_json(res.beliefs.to_json()), a.out)
    if a.diagnostics:
        fileio.dump_json(diag, a.diagnostics)
    else:
        sys.stderr.write(json.dumps(diag) + "\n")


def cmd_sweep(a):
    grid = _floats(a.sigma_j_grid)
    recs = sweep_unbelievable_fraction(a.n, grid, a.sigma_h, a.trials, a.seed, a.threads)
    meta = _metadata(a, n=a.n, sigma_h=a.sigma_h, trials=a.trials, grid=grid)
    _emit(sweep_csv(recs, meta), a.out)


def cmd_compare(a):
    opts = CompareOptions(learn=_learn_opts(a), last=a.last, n_samples=a.samples,
                          max_rank=a.rank, variance_fraction=a.variance_fraction,
                          max_attempts=a.max_attempts)
    res = five_model_comparison(a.trials, a.sigma_j, a.sigma_h, a.n, a.seed, opts, a.threads)
    meta = _metadata(a, n=a.n, sigma_h=a.sigma_h, sigma_j=a.sigma_j, trials=a.trials,
                     options=opts.to_json())
    _emit(comparison_csv(res, meta), a.out)
    if a.summary:
        fileio.dump_json(res.summary(), a.summary)


def cmd_project(a):
    graph = fileio.load_graph(a.model) if a.model else None
    traj, _ = fileio.read_trajectory(a.trajectory, graph)
    proj = export_trajectory_projection(traj, a.k)
    _emit(proj.coords_csv(), a.out)
    if a.components:
        Path(a.components).write_text(proj.components_csv())


def _add_bp(p):
    p.add_argument("--damping-tau", type=float, default=5.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=50000)


def _add_learn(p, iters=2000):
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=iters)
    p.add_argument("--theta-init", default="pmm", help="pmm, zeros, or a model JSON path")
    p.add_argument("--init-policy", default="uniform",
                   choices=["uniform", "fixed", "random", "warm"])


def _add_ensemble(p):
    p.add_argument("--last", type=int, default=100)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--variance-fraction", type=float, default=0.99)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--threads", type=int, default=1)

    ap = argparse.ArgumentParser(prog="bethebp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="random Ising model JSON")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--sigma-h", type=_frac, default=1 / 3)
    p.add_argument("--sigma-j", type=_frac, default=1 / 3)
    p.add_argument("--edges", default=None, help="JSON edge list or model file; default full")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("exact", parents=[common], help="exact marginals by enumeration")
    p.add_argument("model")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("bp", parents=[common], help="run damped loopy BP")
    p.add_argument("model")
    _add_bp(p)
    p.set_defaults(func=cmd_bp)

    def target_args(p):
        p.add_argument("--model", required=True,
                       help="model JSON; its graph is used, and its exact marginals "
                            "when --marginals is absent")
        p.add_argument("--marginals", default=None)

    p = sub.add_parser("believability", parents=[common], help="Bethe Hessian test")
    target_args(p)
    p.add_argument("--believe-tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_believability)

    p = sub.add_parser("pmm", parents=[common], help="pseudo-moment matching parameters")
    target_args(p)
    p.set_defaults(func=cmd_pmm)

    p = sub.add_parser("learn", parents=[common], help="Bethe wake-sleep learning")
    target_args(p)
    _add_learn(p)
    _add_bp(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("ebp", parents=[common], help="ensemble BP from a trajectory")
    p.add_argument("trajectory")
    p.add_argument("--model", default=None, help="graph source if the sidecar is missing")
    p.add_argument("--gaussian", action="store_true")
    p.add_argument("--diagnostics", default=None)
    _add_ensemble(p)
    _add_bp(p)
    p.set_defaults(func=cmd_ebp)

    p = sub.add_parser("sweep-fraction", parents=[common], help="unbelievable fraction vs sigma_J")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--sigma-h", type=_frac, default=1 / 3)
    p.add_argument("--sigma-j-grid", default="0,0.05,0.1,0.15,0.2,0.25,0.3,1/3,0.4,0.5")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--timestamp", action="store_true", help="add a timestamp to the header")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[common], help="five-model comparison")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--sigma-h", type=_frac, default=1 / 3)
    p.add_argument("--sigma-j", type=_frac, default=1 / 3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-attempts", type=int, default=1)
    p.add_argument("--summary", default=None, help="write quartile summary JSON here")
    p.add_argument("--timestamp", action="store_true")
    _add_learn(p)
    _add_ensemble(p)
    _add_bp(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("project", parents=[common], help="PCA of a learning trajectory")
    p.add_argument("trajectory")
    p.add_argument("--model", default=None)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--components", default=None)
    p.set_defaults(func=cmd_project)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (BetheBPError, ValueError, OSError, KeyError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        sys.stderr.write(json.dumps({"error": code, "message": str(exc)}) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
