"""Harness tests: baselines, metrics, configs, pipeline determinism, CLI."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from gsbm import (
    ConfigError,
    LabelAlphabet,
    LabeledGraph,
    baseline_estimates,
    blockwise_procrustes_residual,
    experiment_from_config,
    model_spec_from_config,
    nmse,
    parse_config,
    procrustes_residual,
    run_experiment,
    run_tree_sweep,
)
from gsbm.cli import main as cli_main
from gsbm.harness import true_edge_probabilities, true_label_distributions

EXP_CFG = """
schema_version = 1
model.n = 120
model.space.kind = unit_interval
model.kernel.kind = fourier
model.kernel.form = triangle
model.kernel.label_rule = two_label_2g
model.labels = +1,-1
model.omega_over_n = 0.6
algorithm.r = 3
algorithm.weighing = override
algorithm.weights = +1:1,-1:-1
sweep.omega_over_n = 0.5
seeds.replicates = 2
output.estimate_pairs = 40
"""

TREE_CFG = """
schema_version = 1
tree.r = 3
tree.a = 4
tree.b = 1
tree.labels = e
tree.mu = 1
tree.nu = 1
tree.omega = 2,4
tree.depths = 2,4
tree.trees = 50
tree.trials = 500
"""


def graph_of(edges, n, labels=("+1", "-1")):
    ii, jj, cc = zip(*edges)
    return LabeledGraph(n=n, alphabet=LabelAlphabet(labels),
                        edge_i=np.array(ii), edge_j=np.array(jj), edge_label=np.array(cc))


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

def test_baseline_complete_graph():
    n = 6
    edges = [(i, j, 0) for i in range(n) for j in range(i + 1, n)]
    b_bar, _ = baseline_estimates(graph_of(edges, n, labels=("e",)))
    assert np.allclose(b_bar, 1.0)


def test_baseline_isolated_node_uniform():
    g = graph_of([(0, 1, 0)], n=3)
    _, mu_bar = baseline_estimates(g)
    assert np.allclose(mu_bar[2], [0.5, 0.5])


def test_baseline_label_frequency():
    g = graph_of([(0, 1, 0), (0, 2, 0), (0, 3, 1)], n=5)
    _, mu_bar = baseline_estimates(g)
    assert mu_bar[0] == pytest.approx([2 / 3, 1 / 3])


# ---------------------------------------------------------------------------
# NMSE
# ---------------------------------------------------------------------------

def test_nmse_perfect_estimate_is_zero():
    rng = np.random.default_rng(0)
    truth = rng.random((8, 8))
    base = rng.random((8, 8))
    assert nmse(truth, truth, base) == 0.0


def test_nmse_baseline_is_one():
    rng = np.random.default_rng(1)
    truth = rng.random((8, 8))
    base = rng.random((8, 8))
    assert nmse(base, truth, base) == pytest.approx(1.0)


def test_nmse_zero_denominator_rejected():
    truth = np.ones((4, 4))
    with pytest.raises(ValueError, match="NMSE undefined"):
        nmse(np.zeros((4, 4)), truth, truth)


def test_nmse_ignores_diagonal():
    truth = np.zeros((4, 4))
    est = np.diag([9.0, 9.0, 9.0, 9.0])
    base = np.ones((4, 4))
    assert nmse(est, truth, base) == 0.0


# ---------------------------------------------------------------------------
# Procrustes alignment
# ---------------------------------------------------------------------------

def grid_search_residual(z, f, steps=700_000):
    """Oracle: scan rotations and reflections of the plane."""
    theta = np.linspace(0.0, 2 * np.pi, steps, endpoint=False)
    const = float((z**2).sum() + (f**2).sum())
    best = math.inf
    for refl in (1.0, -1.0):
        m = (f * np.array([1.0, refl])).T @ z
        trace = np.cos(theta) * (m[0, 0] + m[1, 1]) + np.sin(theta) * (m[1, 0] - m[0, 1])
        best = min(best, const - 2.0 * trace.max())
    return best


def test_procrustes_matches_grid_search():
    rng = np.random.default_rng(2)
    for trial in range(4):
        f = rng.standard_normal((150, 2))
        if trial % 2:
            angle = rng.random() * 2 * np.pi
            rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
            z = f @ rot.T + 0.05 * rng.standard_normal((150, 2))
        else:
            z = rng.standard_normal((150, 2))
        closed = procrustes_residual(z, f)
        grid = grid_search_residual(z, f)
        assert closed <= grid + 1e-12
        assert grid - closed < 1e-6


def test_procrustes_exact_rotation_gives_zero():
    rng = np.random.default_rng(3)
    f = rng.standard_normal((60, 2))
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert procrustes_residual(f @ rot.T, f) == pytest.approx(0.0, abs=1e-9)


def test_procrustes_handles_reflection():
    rng = np.random.default_rng(4)
    f = rng.standard_normal((60, 2))
    assert procrustes_residual(f * np.array([1.0, -1.0]), f) == pytest.approx(0.0, abs=1e-9)


def test_blockwise_residual_splits_degenerate_blocks():
    rng = np.random.default_rng(5)
    f = rng.standard_normal((80, 3))
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    eigenvalues = np.array([1.0, 0.4, 0.4, 0.1])

    z = f.copy()
    z[:, 1:] = z[:, 1:] @ rot.T  # rotate inside the degenerate (0.4, 0.4) pair
    assert blockwise_procrustes_residual(z, f, eigenvalues) == pytest.approx(0.0, abs=1e-9)

    mixed = f.copy()
    mixed[:, :2] = mixed[:, :2] @ rot.T  # mix across distinct eigenvalues
    # a single global orthogonal transform can undo any block-diagonal mixing,
    # but the blockwise alignment only rotates within degenerate blocks
    assert procrustes_residual(mixed, f) == pytest.approx(0.0, abs=1e-9)
    assert blockwise_procrustes_residual(mixed, f, eigenvalues) > 1.0


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def test_parse_config_round_trip():
    cfg = parse_config(EXP_CFG)
    assert cfg["model.n"] == "120"
    exp = experiment_from_config(cfg)
    assert exp.model.n == 120
    assert exp.sweep == [0.5]
    assert exp.algorithm.weight_override == {"+1": 1.0, "-1": -1.0}


def test_parse_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("schema_version = 1\nmodel.n = 10\nbogus.key = 3\n")


def test_parse_config_requires_schema_version():
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config("model.n = 10\n")


def test_parse_config_rejects_duplicates():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("schema_version = 1\nmodel.n = 10\nmodel.n = 12\n")


def test_block_model_config():
    text = """
schema_version = 1
model.n = 40
model.space.kind = finite
model.space.weights = 0.5,0.5
model.labels = x,y
model.kernel.kind = block
model.kernel.b = 0.7,0.2;0.2,0.7
model.kernel.mu.x = 0.9,0.4;0.4,0.9
model.kernel.mu.y = 0.1,0.6;0.6,0.1
model.omega = 30
"""
    spec = model_spec_from_config(parse_config(text))
    assert spec.kernel.edge_prob[0, 1] == 0.2
    assert spec.kernel.label_dist[0, 1, 1] == 0.6
    assert spec.omega == 30.0


def test_config_rejects_both_omega_forms():
    text = "schema_version = 1\nmodel.n = 10\nmodel.omega = 5\nmodel.omega_over_n = 0.5\n"
    with pytest.raises(ConfigError, match="not both"):
        model_spec_from_config(parse_config(text))


# ---------------------------------------------------------------------------
# Truth matrices
# ---------------------------------------------------------------------------

def test_truth_matrices_for_two_label_rule():
    cfg = parse_config(EXP_CFG)
    spec = model_spec_from_config(cfg)
    sigma = np.linspace(0.0, 0.9, spec.n)
    b = true_edge_probabilities(spec, sigma)
    mu = true_label_distributions(spec, sigma)
    assert b[0, 1] == pytest.approx(spec.kernel.g(sigma[0] - sigma[1]))
    assert mu[0, 3, 7] == pytest.approx(2 * spec.kernel.g(sigma[3] - sigma[7]))
    assert mu[1, 3, 7] == pytest.approx(1 - 2 * spec.kernel.g(sigma[3] - sigma[7]))
    assert np.all(np.diagonal(b) == 0.0)


# ---------------------------------------------------------------------------
# Experiment pipeline
# ---------------------------------------------------------------------------

def test_experiment_outputs_and_determinism(tmp_path):
    cfg = parse_config(EXP_CFG)
    exp = experiment_from_config(cfg)
    rows1 = run_experiment(exp, seed=11, out_dir=tmp_path / "a", config_text=EXP_CFG)
    rows2 = run_experiment(exp, seed=11, out_dir=tmp_path / "b", config_text=EXP_CFG)
    assert len(rows1) == 2
    for name in ("metrics.csv", "embedding_w0.5_r0.csv", "embedding_w0.5_r1.csv",
                 "spectrum_w0.5_r0.csv", "estimates_w0.5_r0.csv", "run.json"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, f"{name} not deterministic"
        assert len(a) > 0
    header = (tmp_path / "a" / "metrics.csv").read_text().splitlines()[0]
    assert header.startswith("omega_over_n,replicate,edges,epsilon,eigratio_1")
    assert header.endswith("eigen_gap,nmse_b,nmse_mu,procrustes_residual")
    for row in rows1:
        assert np.isfinite(row.nmse_b)
        assert row.nmse_mu is not None and np.isfinite(row.nmse_mu)
        assert np.all(np.isfinite(row.eigen_ratios))


def test_experiment_distinct_seeds_differ(tmp_path):
    cfg = parse_config(EXP_CFG)
    exp = experiment_from_config(cfg)
    run_experiment(exp, seed=1, out_dir=tmp_path / "a", config_text=EXP_CFG)
    run_experiment(exp, seed=2, out_dir=tmp_path / "b", config_text=EXP_CFG)
    assert (tmp_path / "a" / "metrics.csv").read_text() != (tmp_path / "b" / "metrics.csv").read_text()


def test_manifest_contents(tmp_path):
    cfg = parse_config(EXP_CFG)
    exp = experiment_from_config(cfg)
    run_experiment(exp, seed=11, out_dir=tmp_path, config_text=EXP_CFG)
    manifest = json.loads((tmp_path / "run.json").read_text())
    assert manifest["seed"] == 11
    assert manifest["errors"] == []
    assert len(manifest["config_sha256"]) == 64
    assert set(manifest["versions"]) == {"gsbm", "numpy", "scipy"}


def test_embedding_dump_schema(tmp_path):
    cfg = parse_config(EXP_CFG)
    exp = experiment_from_config(cfg)
    run_experiment(exp, seed=11, out_dir=tmp_path, config_text=EXP_CFG)
    lines = (tmp_path / "embedding_w0.5_r0.csv").read_text().splitlines()
    assert lines[0] == ("i,sigma,z_1,z_2,z_3,f_1,f_2,f_3,emp_x,emp_y,ideal_x,ideal_y")
    assert len(lines) == 121


def test_experiment_isolates_failing_sweep_points(tmp_path, capsys):
    # An effectively-zero observation rate yields an empty graph, which has
    # no leading eigenvalue; the point fails but the sweep must go on.
    text = EXP_CFG.replace("sweep.omega_over_n = 0.5", "sweep.omega_over_n = 1e-09,0.5")
    cfg = parse_config(text)
    exp = experiment_from_config(cfg)
    rows = run_experiment(exp, seed=4, out_dir=tmp_path, config_text=text)
    assert len(rows) == 2  # only the healthy point, both replicates
    assert all(row.omega_over_n == 0.5 for row in rows)
    err = capsys.readouterr().err
    assert "omega_over_n=1e-09" in err
    manifest = json.loads((tmp_path / "run.json").read_text())
    assert len(manifest["errors"]) == 2
    assert "omega_over_n=1e-09 replicate=0" in manifest["errors"][0]


def test_single_point_metrics_row(tmp_path):
    # One sweep point, one replicate: metrics.csv carries exactly one data
    # row and the second eigenvalue ratio is near the population -4/pi^2.
    text = EXP_CFG.replace("model.n = 120", "model.n = 600") \
                  .replace("sweep.omega_over_n = 0.5", "sweep.omega_over_n = 0.6") \
                  .replace("seeds.replicates = 2", "seeds.replicates = 1")
    cfg = parse_config(text)
    rows = run_experiment(experiment_from_config(cfg), seed=0, out_dir=tmp_path,
                          config_text=text)
    lines = (tmp_path / "metrics.csv").read_text().splitlines()
    assert len(lines) == 2
    # labeled +/-1 weighing: the degenerate oscillating pair leads, so
    # lambda_2 / lambda_1 is close to +1
    assert abs(abs(rows[0].eigen_ratios[1]) - 1.0) < 0.15


def test_tree_sweep_csv(tmp_path):
    cfg = parse_config(TREE_CFG)
    rows = run_tree_sweep(cfg, seed=0, out_dir=tmp_path, config_text=TREE_CFG)
    assert len(rows) == 4
    lines = (tmp_path / "tree_sweep.csv").read_text().splitlines()
    assert lines[0] == "omega,R,mean_abs_dev,ci_lo,ci_hi,survival"
    assert len(lines) == 5
    # below the impossibility threshold (omega_0 = 5) deeper shells flatten
    by_key = {(r["omega"], r["R"]): r for r in rows}
    assert by_key[(2.0, 4)]["mean_abs_dev"] < by_key[(2.0, 2)]["mean_abs_dev"]


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_generate_and_infer(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    cfg_file.write_text(EXP_CFG)
    out = tmp_path / "gen"
    assert cli_main(["generate", "--config", str(cfg_file), "--seed", "3", "--out", str(out)]) == 0
    edges = (out / "edges.txt").read_text().splitlines()
    assert edges[0].startswith("n 120 labels +1,-1")
    attrs = (out / "attributes.txt").read_text().splitlines()
    assert len(attrs) == 120

    inf_out = tmp_path / "inf"
    assert cli_main(["infer", "--config", str(cfg_file), "--seed", "3",
                     "--out", str(inf_out), "--graph", str(out / "edges.txt"),
                     "--pairs", "64"]) == 0
    est = (inf_out / "estimates.csv").read_text().splitlines()
    assert est[0] == "i,j,bhat,muhat_+1,muhat_-1"
    assert len(est) == 65


def test_cli_spectrum_and_experiment_and_tree(tmp_path):
    cfg_file = tmp_path / "exp.cfg"
    cfg_file.write_text(EXP_CFG + "spectrum.m = 400\n")
    out = tmp_path / "spec"
    assert cli_main(["spectrum", "--config", str(cfg_file), "--out", str(out)]) == 0
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "k,lambda_k"
    assert len(lines) > 10

    out2 = tmp_path / "exp"
    assert cli_main(["experiment", "--config", str(cfg_file), "--seed", "1",
                     "--out", str(out2)]) == 0
    assert (out2 / "metrics.csv").exists()

    tree_file = tmp_path / "tree.cfg"
    tree_file.write_text(TREE_CFG)
    out3 = tmp_path / "tree"
    assert cli_main(["tree-sweep", "--config", str(tree_file), "--seed", "1",
                     "--out", str(out3)]) == 0
    assert (out3 / "tree_sweep.csv").exists()


def test_cli_reports_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("schema_version = 1\nmodel.n = 10\nnope = 1\n")
    assert cli_main(["generate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
