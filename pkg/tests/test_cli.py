import json

import numpy as np
import pytest

from bethebp.cli import main
from bethebp.fileio import meta_path, read_trajectory, write_trajectory
from bethebp.harness import csv_body
from bethebp.learning import LearnOptions, bethe_wake_sleep
from bethebp.model import IsingModel, exact_log_partition, exact_marginals, symmetric_four_node


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def four_node(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(symmetric_four_node(0.5).to_json()))
    return path


def test_generate_then_exact(tmp_path, capsys):
    mpath = tmp_path / "g.json"
    code, _, _ = run(["generate", "--n", 5, "--sigma-j", "1/3", "--seed", 4, "--out", mpath], capsys)
    assert code == 0
    m = IsingModel.from_json(json.loads(mpath.read_text()))
    assert m.n == 5 and len(m.edges) == 10
    code, out, _ = run(["exact", mpath], capsys)
    d = json.loads(out)
    assert d["log_partition"] == pytest.approx(exact_log_partition(m), abs=1e-12)
    np.testing.assert_allclose(d["qi_plus"], exact_marginals(m).qi_plus, atol=1e-14)


def test_generate_is_seeded(capsys):
    _, a, _ = run(["generate", "--seed", 11], capsys)
    _, b, _ = run(["generate", "--seed", 11], capsys)
    _, c, _ = run(["generate", "--seed", 12], capsys)
    assert a == b != c


def test_bp_and_believability(four_node, capsys):
    code, out, _ = run(["bp", four_node], capsys)
    assert code == 0 and json.loads(out)["converged"]
    code, out, _ = run(["believability", "--model", four_node], capsys)
    d = json.loads(out)
    assert d["classification"] == "unbelievable" and d["lambda_min"] < 0


def test_pmm_reports_couplings(four_node, capsys):
    code, out, _ = run(["pmm", "--model", four_node], capsys)
    d = json.loads(out)
    assert code == 0
    np.testing.assert_allclose(d["J"], 1.0525169555592825, atol=1e-9)


def test_learn_ebp_project_pipeline(four_node, tmp_path, capsys):
    traj = tmp_path / "t.jsonl"
    code, out, _ = run(["learn", "--model", four_node, "--iters", 300, "--init-policy", "fixed",
                        "--seed", 1, "--out", traj], capsys)
    assert code == 0 and json.loads(out)["iterations"] == 300
    assert meta_path(traj).exists()
    diag = tmp_path / "d.json"
    code, out, _ = run(["ebp", traj, "--last", 100, "--diagnostics", diag], capsys)
    assert code == 0
    d = json.loads(diag.read_text())
    assert d["mode"] == "exact" and d["max_abs_error"] < 1e-6
    code, out, err = run(["ebp", traj, "--gaussian", "--samples", 20], capsys)
    assert code == 0 and json.loads(err)["mode"] == "gaussian"
    comps = tmp_path / "c.csv"
    code, out, _ = run(["project", traj, "--components", comps], capsys)
    assert code == 0 and out.splitlines()[0].startswith("iter,theta_pc1")
    assert comps.exists()


def test_learn_requires_out(four_node, capsys):
    code, _, err = run(["learn", "--model", four_node, "--iters", 2], capsys)
    assert code == 2 and json.loads(err)["error"] == "ValueError"


def test_error_json_for_missing_file(tmp_path, capsys):
    code, _, err = run(["exact", tmp_path / "nope.json"], capsys)
    d = json.loads(err)
    assert code == 2 and set(d) == {"error", "message"}


def test_error_code_for_capacity(tmp_path, capsys):
    path = tmp_path / "big.json"
    run(["generate", "--n", 21, "--out", path], capsys)
    code, _, err = run(["exact", path], capsys)
    assert code == 2 and json.loads(err)["error"] == "capacity"


def test_sweep_and_compare_thread_invariance(tmp_path, capsys):
    bodies = []
    for threads in (1, 4):
        _, out, _ = run(["sweep-fraction", "--trials", 10, "--sigma-j-grid", "0.2,1/3",
                         "--threads", threads], capsys)
        bodies.append(csv_body(out))
    assert bodies[0] == bodies[1]
    summary = tmp_path / "s.json"
    bodies = []
    for threads in (1, 4):
        _, out, _ = run(["compare", "--trials", 2, "--iters", 60, "--last", 30, "--samples", 10,
                         "--threads", threads, "--summary", summary], capsys)
        bodies.append(csv_body(out))
    assert bodies[0] == bodies[1]
    assert "iv" in json.loads(summary.read_text())


def test_trajectory_roundtrip(tmp_path):
    p = exact_marginals(symmetric_four_node(0.5))
    traj = bethe_wake_sleep(p, LearnOptions(iters=40, init_policy="fixed", seed=3))
    path = tmp_path / "t.jsonl"
    write_trajectory(traj, path, target=p)
    back, target = read_trajectory(path)
    np.testing.assert_array_equal(back.theta, traj.theta)
    np.testing.assert_array_equal(back.beliefs_matrix, traj.beliefs_matrix)
    np.testing.assert_array_equal(back.converged, traj.converged)
    np.testing.assert_array_equal(target.vector(), p.vector())
    assert back.options == traj.options


def test_trajectory_without_sidecar_needs_graph(tmp_path):
    p = exact_marginals(symmetric_four_node(0.5))
    traj = bethe_wake_sleep(p, LearnOptions(iters=5))
    path = tmp_path / "t.jsonl"
    write_trajectory(traj, path)
    meta_path(path).unlink()
    with pytest.raises(ValueError):
        read_trajectory(path)
    back, target = read_trajectory(path, graph=p.graph)
    assert target is None and len(back) == 5
