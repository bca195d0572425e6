"""JSON / JSON-lines readers and writers for models, marginals and trajectories."""
from __future__ import annotations

import json
from pathlib import Path

from .graph import Graph
from .learning import LearnOptions, LearningTrajectory
from .model import IsingModel
from .pseudomarginal import Pseudomarginals
from .bp import BPOptions


def load_json(path):
    with open(path) as f:
        return json.load(f)


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def graph_from_json(d: dict) -> Graph:
    return Graph.from_edges(d["n"], d["edges"])


def load_model(path) -> IsingModel:
    return IsingModel.from_json(load_json(path))


def load_graph(path) -> Graph:
    return graph_from_json(load_json(path))


def load_marginals(path, graph: Graph) -> Pseudomarginals:
    d = load_json(path)
    # accept a whole BP result as well as bare marginals
    if "beliefs" in d:
        d = d["beliefs"]
    return Pseudomarginals.from_json(graph, d)


def meta_path(trajectory_path) -> Path:
    p = Path(trajectory_path)
    return p.with_name(p.name + ".meta.json")


def write_trajectory(traj: LearningTrajectory, path, target: Pseudomarginals | None = None) -> None:
    """JSON-lines records plus a ``.meta.json`` sidecar holding graph, target and options."""
    with open(path, "w") as f:
        for rec in traj.records():
            f.write(json.dumps(rec) + "\n")
    meta = {
        "graph": traj.graph.to_json(),
        "options": traj.options.to_json(),
        "theta_final": traj.theta_final.tolist(),
    }
    if target is not None:
        meta["target"] = target.to_json()
    dump_json(meta, meta_path(path))


def _options_from_json(d: dict | None) -> LearnOptions:
    if not d:
        return LearnOptions()
    d = dict(d)
    bp = BPOptions(**d.pop("bp", {}))
    return LearnOptions(bp=bp, **d)


def read_trajectory(path, graph: Graph | None = None):
    """Return ``(trajectory, target or None)``; ``graph`` is needed without a sidecar."""
    mp = meta_path(path)
    meta = load_json(mp) if mp.exists() else {}
    if graph is None:
        if "graph" not in meta:
            raise ValueError(f"no graph given and no sidecar {mp}")
        graph = graph_from_json(meta["graph"])
    target = Pseudomarginals.from_json(graph, meta["target"]) if "target" in meta else None
    with open(path) as f:
        records = [json.loads(line) for line in f if line.strip()]
    traj = LearningTrajectory.from_records(graph, records, _options_from_json(meta.get("options")),
                                           target)
    return traj, target
