"""Experiment orchestration: configs, baselines, metrics, CSV emission.

Config files are flat ``key = value`` trees with dotted keys; ``#`` starts
a comment and a ``schema_version = 1`` key is required. Schema:

    model.n                 node count
    model.space.kind        unit_interval | finite
    model.space.weights     finite only: comma list, sums to 1
    model.labels            comma list of edge labels (default: single "e")
    model.kernel.kind       fourier | block
    model.kernel.form       fourier built-ins: triangle | band
    model.kernel.g0         fourier explicit coefficients (with .gk)
    model.kernel.gk         comma list
    model.kernel.label_rule none | two_label_2g
    model.kernel.b          block edge probabilities: rows ';', entries ','
    model.kernel.mu.<label> block label law per label, same matrix syntax
    model.omega             observation intensity (or model.omega_over_n)
    model.omega_over_n
    algorithm.r             embedding rank
    algorithm.tol           eigensolver residual tolerance (default 1e-8)
    algorithm.epsilon_rule  median | fixed
    algorithm.epsilon_value fixed rule only
    algorithm.weighing      random | override
    algorithm.weights       override map "label:value,label:value"
    sweep.omega_over_n      comma list of observation rates
    seeds.replicates        replicates per sweep point (default 1)
    output.estimate_pairs   sampled pairs written per run (default 200)
    nmse.mu_literal         scale the label NMSE numerator target by omega/n
    tree.*                  tree-sweep block, see run_tree_sweep

Per sweep point and replicate the experiment writes an embedding dump, an
operator-spectrum dump and a sampled estimates CSV; metrics.csv collects
one row per run. Timing goes to a separate timings.csv so that every other
output is byte-identical under a fixed root seed. A run.json manifest
records the config hash, seed and component versions.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .model import (
    BlockKernel,
    FiniteSet,
    FourierKernel,
    LabelAlphabet,
    LabeledGraph,
    ModelSpec,
    TWO_LABEL_2G,
    UnitInterval,
    band_kernel,
    generate_graph,
    sample_attributes,
    triangle_kernel,
)
from .operator_spectrum import OperatorSpectrum, fourier_spectrum, ideal_embedding, nystrom_spectrum
from .spectral import (
    SpectralState,
    build_weighted_adjacency,
    draw_weighing,
    embed,
    estimate_all_pairs,
    select_epsilon,
    top_eigenpairs,
)
from .tree_threshold import (
    SparseParams,
    coupling_survival,
    posterior_deviation,
    root_posterior,
    sample_forest,
    thresholds,
)

SCHEMA_VERSION = 1

_KNOWN_PREFIXES = (
    "schema_version",
    "model.", "algorithm.", "sweep.", "seeds.", "output.", "nmse.", "tree.", "spectrum.",
)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def parse_config(text: str) -> dict[str, str]:
    """Flat key-value tree: ``key = value`` lines, ``#`` comments."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not any(key == p or key.startswith(p) for p in _KNOWN_PREFIXES):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    if out.get("schema_version") != str(SCHEMA_VERSION):
        raise ConfigError(f"config must declare schema_version = {SCHEMA_VERSION}")
    return out


def _floats(value: str) -> list[float]:
    return [float(v) for v in value.split(",") if v.strip() != ""]


def _matrix(value: str) -> np.ndarray:
    return np.array([[float(v) for v in row.split(",")] for row in value.split(";")])


def _bool(value: str) -> bool:
    if value.lower() in ("true", "1", "yes"):
        return True
    if value.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected boolean, got {value!r}")


def _require(cfg: dict[str, str], key: str) -> str:
    if key not in cfg:
        raise ConfigError(f"missing required key {key!r}")
    return cfg[key]


def model_spec_from_config(cfg: dict[str, str]) -> ModelSpec:
    n = int(_require(cfg, "model.n"))
    if "model.omega" in cfg and "model.omega_over_n" in cfg:
        raise ConfigError("give model.omega or model.omega_over_n, not both")
    labels = tuple(cfg.get("model.labels", "e").split(","))
    alphabet = LabelAlphabet(labels)

    space_kind = cfg.get("model.space.kind", "unit_interval")
    if space_kind == "unit_interval":
        space = UnitInterval()
    elif space_kind == "finite":
        space = FiniteSet(tuple(_floats(_require(cfg, "model.space.weights"))))
    else:
        raise ConfigError(f"unknown space kind {space_kind!r}")

    kind = cfg.get("model.kernel.kind", "fourier")
    if kind == "fourier":
        rule = cfg.get("model.kernel.label_rule", "none")
        label_rule = None if rule == "none" else rule
        form = cfg.get("model.kernel.form")
        if form == "triangle":
            kernel = triangle_kernel(label_rule=label_rule)
        elif form == "band":
            kernel = band_kernel()
        elif form is None:
            kernel = FourierKernel(
                g0=float(_require(cfg, "model.kernel.g0")),
                gk=np.array(_floats(cfg.get("model.kernel.gk", ""))),
                label_rule=label_rule,
            )
        else:
            raise ConfigError(f"unknown kernel form {form!r}")
    elif kind == "block":
        b = _matrix(_require(cfg, "model.kernel.b"))
        rows = []
        for label in labels:
            key = f"model.kernel.mu.{label}"
            if key not in cfg:
                raise ConfigError(f"missing {key} for block kernel")
            rows.append(_matrix(cfg[key]))
        label_dist = np.stack(rows, axis=2)
        kernel = BlockKernel(edge_prob=b, label_dist=label_dist)
    else:
        raise ConfigError(f"unknown kernel kind {kind!r}")

    if "model.omega" in cfg:
        omega = float(cfg["model.omega"])
    elif "model.omega_over_n" in cfg:
        omega = float(cfg["model.omega_over_n"]) * n
    else:
        raise ConfigError("model.omega or model.omega_over_n required")
    return ModelSpec(n=n, space=space, kernel=kernel, alphabet=alphabet, omega=omega)


@dataclass
class AlgorithmConfig:
    r: int
    tol: float = 1e-8
    epsilon_rule: str = "median"
    epsilon_value: Optional[float] = None
    weighing: str = "random"
    weight_override: Optional[dict[str, float]] = None

    def __post_init__(self):
        if self.r < 1:
            raise ConfigError("algorithm.r must be at least 1")
        if self.epsilon_rule not in ("median", "fixed"):
            raise ConfigError(f"unknown epsilon rule {self.epsilon_rule!r}")
        if self.epsilon_rule == "fixed" and not self.epsilon_value:
            raise ConfigError("fixed epsilon rule needs algorithm.epsilon_value")
        if self.weighing not in ("random", "override"):
            raise ConfigError(f"unknown weighing mode {self.weighing!r}")
        if self.weighing == "override" and not self.weight_override:
            raise ConfigError("override weighing needs algorithm.weights")


def algorithm_from_config(cfg: dict[str, str]) -> AlgorithmConfig:
    override = None
    if "algorithm.weights" in cfg:
        override = {}
        for item in cfg["algorithm.weights"].split(","):
            label, _, val = item.partition(":")
            if not _:
                raise ConfigError(f"bad weight entry {item!r}")
            override[label.strip()] = float(val)
    return AlgorithmConfig(
        r=int(cfg.get("algorithm.r", "3")),
        tol=float(cfg.get("algorithm.tol", "1e-8")),
        epsilon_rule=cfg.get("algorithm.epsilon_rule", "median"),
        epsilon_value=float(cfg["algorithm.epsilon_value"]) if "algorithm.epsilon_value" in cfg else None,
        weighing=cfg.get("algorithm.weighing", "random"),
        weight_override=override,
    )


@dataclass
class ExperimentConfig:
    model: ModelSpec
    algorithm: AlgorithmConfig
    sweep: list[float]
    replicates: int
    estimate_pairs: int = 200
    nmse_mu_literal: bool = False

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigError("seeds.replicates must be at least 1")
        for w in self.sweep:
            if not 0.0 < w <= 1.0:
                raise ConfigError(f"sweep value {w} outside (0, 1]")


def experiment_from_config(cfg: dict[str, str]) -> ExperimentConfig:
    model = model_spec_from_config(cfg)
    algo = algorithm_from_config(cfg)
    sweep = _floats(cfg["sweep.omega_over_n"]) if "sweep.omega_over_n" in cfg else [model.retention]
    return ExperimentConfig(
        model=model,
        algorithm=algo,
        sweep=sweep,
        replicates=int(cfg.get("seeds.replicates", "1")),
        estimate_pairs=int(cfg.get("output.estimate_pairs", "200")),
        nmse_mu_literal=_bool(cfg.get("nmse.mu_literal", "false")),
    )


# ---------------------------------------------------------------------------
# Baselines, truths and metrics
# ---------------------------------------------------------------------------

def baseline_estimates(graph: LabeledGraph) -> tuple[np.ndarray, np.ndarray]:
    """Empirical-average baselines.

    Returns (b_bar, mu_bar): b_bar[i] = deg(i) / (n - 1) stands in for every
    pair (i, j); mu_bar[i] is node i's empirical label frequency, uniform
    for isolated nodes (division-by-zero convention, recorded here).
    """
    deg = graph.degrees().astype(float)
    b_bar = deg / max(graph.n - 1, 1)
    L = graph.alphabet.size
    counts = np.zeros((graph.n, L))
    np.add.at(counts, (graph.edge_i, graph.edge_label), 1.0)
    np.add.at(counts, (graph.edge_j, graph.edge_label), 1.0)
    mu_bar = np.full((graph.n, L), 1.0 / L)
    nz = deg > 0
    mu_bar[nz] = counts[nz] / deg[nz, None]
    return b_bar, mu_bar


def true_edge_probabilities(spec: ModelSpec, attributes: np.ndarray) -> np.ndarray:
    """B*[i, j] = B(sigma_i, sigma_j) with a zeroed diagonal."""
    attributes = np.asarray(attributes)
    b = spec.edge_probability(attributes[:, None], attributes[None, :])
    np.fill_diagonal(b, 0.0)
    return b


def true_label_distributions(spec: ModelSpec, attributes: np.ndarray) -> np.ndarray:
    """mu*[l, i, j] = mu_{sigma_i, sigma_j}(l), diagonal zeroed."""
    attributes = np.asarray(attributes)
    L = spec.alphabet.size
    n = attributes.size
    out = np.empty((L, n, n))
    if isinstance(spec.kernel, FourierKernel):
        if spec.kernel.label_rule == TWO_LABEL_2G:
            p = spec.kernel.label_probabilities(attributes[:, None], attributes[None, :])
            out[0] = p
            out[1] = 1.0 - p
        else:
            out[0] = 1.0  # single-label alphabet: the label law is trivial
    else:
        ci = attributes.astype(int)
        dist = spec.kernel.label_dist[ci[:, None], ci[None, :]]  # (n, n, L)
        out = np.moveaxis(dist, 2, 0).copy()
    for l in range(L):
        np.fill_diagonal(out[l], 0.0)
    return out


def nmse(estimate: np.ndarray, truth: np.ndarray, baseline: np.ndarray) -> float:
    """Frobenius error of the estimate over that of the baseline.

    Inputs share a shape whose last two axes are (n, n); the pair set is
    all ordered pairs i != j (the diagonal is excluded). Values below 1
    mean the estimate beats the empirical-average baseline.
    """
    if estimate.shape != truth.shape or baseline.shape != truth.shape:
        raise ValueError("estimate, truth and baseline must share a shape")
    n = truth.shape[-1]
    off = ~np.eye(n, dtype=bool)
    num = float(np.sqrt(((estimate - truth) ** 2)[..., off].sum()))
    den = float(np.sqrt(((baseline - truth) ** 2)[..., off].sum()))
    if den == 0.0:
        raise ValueError("baseline matches truth exactly; NMSE undefined")
    return num / den


def procrustes_residual(z: np.ndarray, f: np.ndarray) -> float:
    """min over orthogonal O of sum_i ||z_i - O f_i||^2 (closed form via SVD)."""
    if z.shape != f.shape:
        raise ValueError("point clouds must share a shape")
    s = np.linalg.svd(f.T @ z, compute_uv=False)
    val = float((z**2).sum() + (f**2).sum() - 2.0 * s.sum())
    return max(val, 0.0)


def circle_embedding_residual(n: int, omega_over_n: float, seed: int) -> float:
    """Alignment residual of the oscillating eigenvector pair for the
    built-in triangle kernel, normalized by the ideal cloud's energy.

    Generates an unlabeled graph, takes the (v3, v2) eigenvector
    projection, and Procrustes-aligns it against the population circle
    sqrt(2/n) (cos 2 pi sigma, sin 2 pi sigma). Stops short of the
    estimator stage, so it is cheap enough for convergence studies.
    """
    spec = ModelSpec(n=n, space=UnitInterval(), kernel=triangle_kernel(),
                     alphabet=LabelAlphabet(("e",)), omega=omega_over_n * n)
    attributes = sample_attributes(spec, seed)
    graph = generate_graph(spec, attributes, seed)
    weighing = draw_weighing(spec.alphabet, seed, override={"e": 1.0})
    state = top_eigenpairs(build_weighted_adjacency(graph, weighing), 3, seed=seed)
    points = state.eigenvectors[:, [2, 1]]
    angle = 2.0 * np.pi * attributes
    ideal = np.sqrt(2.0 / n) * np.column_stack([np.cos(angle), np.sin(angle)])
    return procrustes_residual(points, ideal) / float((ideal**2).sum())


def blockwise_procrustes_residual(z: np.ndarray, f: np.ndarray,
                                  eigenvalues: np.ndarray, tol: float = 1e-9) -> float:
    """Sum of per-block residuals, blocks being runs of equal |eigenvalue|.

    Degenerate eigenvalues fix eigenvectors only up to an orthogonal
    transform of the block, so each block is aligned independently.
    """
    mags = np.abs(np.asarray(eigenvalues)[: z.shape[1]])
    total = 0.0
    start = 0
    for k in range(1, z.shape[1] + 1):
        if k == z.shape[1] or abs(mags[k] - mags[start]) > tol * max(mags[0], 1e-300):
            total += procrustes_residual(z[:, start:k], f[:, start:k])
            start = k
    return total


# ---------------------------------------------------------------------------
# Single runs and experiments
# ---------------------------------------------------------------------------

@dataclass
class MetricsRow:
    omega_over_n: float
    replicate: int
    edges: int
    epsilon: float
    eigen_ratios: np.ndarray
    eigen_gap: float
    nmse_b: float
    nmse_mu: Optional[float]
    procrustes: Optional[float]
    wall_clock: float


@dataclass
class RunResult:
    metrics: MetricsRow
    graph: LabeledGraph
    state: SpectralState
    spectrum: Optional[OperatorSpectrum]
    ideal: Optional[np.ndarray]        # (n, r) population embedding
    fig_points: Optional[np.ndarray]   # (n, 2) raw (v3, v2) projection
    fig_ideal: Optional[np.ndarray]    # (n, 2) its population counterpart


def run_single(model: ModelSpec, algo: AlgorithmConfig, seed: int,
               nmse_mu_literal: bool = False) -> RunResult:
    """Generate one graph, run the spectral pipeline, score against truth."""
    t0 = time.perf_counter()
    attributes = sample_attributes(model, seed)
    graph = generate_graph(model, attributes, seed)

    if algo.weighing == "override":
        weighing = draw_weighing(model.alphabet, seed, override=algo.weight_override)
    else:
        weighing = draw_weighing(model.alphabet, seed)
    wadj = build_weighted_adjacency(graph, weighing)
    state = embed(top_eigenpairs(wadj, algo.r, tol=algo.tol, seed=seed))
    if state.gap < 1e-3 * abs(state.eigenvalues[0]):
        warnings.warn(
            f"spectral gap |l_r|-|l_r+1| = {state.gap:.3g} is below "
            f"1e-3 |l_1|; the embedding rank r={algo.r} may be unreliable",
            stacklevel=2,
        )
    if algo.epsilon_rule == "fixed":
        eps = float(algo.epsilon_value)
    else:
        eps = select_epsilon(state, seed=seed)

    est = estimate_all_pairs(graph, state, eps)
    b_bar, mu_bar = baseline_estimates(graph)
    b_true = true_edge_probabilities(model, attributes)
    target_b = model.retention * b_true
    ones = np.ones((model.n, model.n))
    np.fill_diagonal(ones, 0.0)
    nmse_b = nmse(est.b_hat, target_b, b_bar[:, None] * ones)

    nmse_mu = None
    if model.alphabet.size > 1:
        mu_true = true_label_distributions(model, attributes)
        mu_base = mu_bar.T[:, :, None] * ones[None, :, :]
        target_mu = model.retention * mu_true if nmse_mu_literal else mu_true
        nmse_mu = nmse(est.mu_hat, target_mu, mu_base)

    spectrum = None
    ideal = None
    fig_points = None
    fig_ideal = None
    try:
        if isinstance(model.kernel, FourierKernel):
            spectrum = fourier_spectrum(model.kernel, weighing)
        else:
            spectrum = nystrom_spectrum(model.space, model.kernel, weighing)
    except ValueError:
        spectrum = None
    if spectrum is not None and spectrum.eigenvalues.size >= algo.r:
        ideal = ideal_embedding(spectrum, attributes, algo.r)
        if algo.r >= 3:
            fig_points = state.eigenvectors[:, [2, 1]].copy()
            fig_ideal = np.column_stack([
                spectrum.phi(2, attributes), spectrum.phi(1, attributes)
            ]) / math.sqrt(model.n)

    proc = None
    if fig_points is not None:
        norm = float((fig_ideal**2).sum())
        if norm > 0:
            proc = procrustes_residual(fig_points, fig_ideal) / norm

    lam = state.eigenvalues
    metrics = MetricsRow(
        omega_over_n=model.retention,
        replicate=-1,
        edges=graph.num_edges,
        epsilon=eps,
        eigen_ratios=lam / lam[0],
        eigen_gap=state.gap,
        nmse_b=nmse_b,
        nmse_mu=nmse_mu,
        procrustes=proc,
        wall_clock=time.perf_counter() - t0,
    )
    return RunResult(metrics=metrics, graph=graph, state=state, spectrum=spectrum,
                     ideal=ideal, fig_points=fig_points, fig_ideal=fig_ideal)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def _derive_seed(root_seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(root_seed, spawn_key=(20, *key)).generate_state(1)[0])


def _write_manifest(out_dir: Path, command: str, config_text: str, seed: int, errors):
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "seed": seed,
        "versions": {
            "gsbm": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "errors": list(errors),
    }
    (out_dir / "run.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_embedding_csv(path: Path, result: RunResult, attributes: np.ndarray):
    r = result.state.r
    z = result.state.embedding
    cols = ["i", "sigma"] + [f"z_{k + 1}" for k in range(r)]
    ideal = result.ideal
    if ideal is not None:
        cols += [f"f_{k + 1}" for k in range(r)]
    if result.fig_points is not None:
        cols += ["emp_x", "emp_y", "ideal_x", "ideal_y"]
    with path.open("w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(result.graph.n):
            row = [str(i), _fmt(attributes[i])]
            row += [_fmt(v) for v in z[i]]
            if ideal is not None:
                row += [_fmt(v) for v in ideal[i]]
            if result.fig_points is not None:
                row += [_fmt(result.fig_points[i, 0]), _fmt(result.fig_points[i, 1]),
                        _fmt(result.fig_ideal[i, 0]), _fmt(result.fig_ideal[i, 1])]
            fh.write(",".join(row) + "\n")


def _write_spectrum_csv(path: Path, spectrum: OperatorSpectrum, k_max: int = 100):
    with path.open("w") as fh:
        fh.write("k,lambda_k\n")
        for k, lam in enumerate(spectrum.eigenvalues[:k_max], start=1):
            fh.write(f"{k},{_fmt(lam)}\n")


def _write_estimates_csv(path: Path, graph: LabeledGraph, state, eps: float,
                         n_pairs: int, seed: int):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(21,)))
    n = graph.n
    count = min(n_pairs, n * (n - 1))
    ii = rng.integers(0, n, size=count)
    jj = rng.integers(0, n - 1, size=count)
    jj = np.where(jj >= ii, jj + 1, jj)
    est = estimate_all_pairs(graph, state, eps, pairs=np.column_stack([ii, jj]))
    labels = graph.alphabet.labels
    with path.open("w") as fh:
        fh.write("i,j,bhat," + ",".join(f"muhat_{l}" for l in labels) + "\n")
        for row in range(count):
            vals = [str(ii[row]), str(jj[row]), _fmt(est.b_hat[row])]
            vals += [_fmt(v) for v in est.mu_hat[row]]
            fh.write(",".join(vals) + "\n")


def run_experiment(config: ExperimentConfig, seed: int, out_dir: Path,
                   config_text: str = "", command: str = "experiment") -> list[MetricsRow]:
    """Sweep omega/n and replicates; write all CSV outputs into out_dir.

    Failures are isolated per sweep point: the failing point is reported on
    stderr and in the manifest, and the remaining points still run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[MetricsRow] = []
    errors: list[str] = []
    for si, w in enumerate(config.sweep):
        model = ModelSpec(
            n=config.model.n, space=config.model.space, kernel=config.model.kernel,
            alphabet=config.model.alphabet, omega=w * config.model.n,
        )
        for rep in range(config.replicates):
            run_seed = _derive_seed(seed, si, rep)
            try:
                result = run_single(model, config.algorithm, run_seed,
                                    nmse_mu_literal=config.nmse_mu_literal)
            except Exception as exc:  # keep the sweep alive
                msg = f"omega_over_n={w:g} replicate={rep}: {exc}"
                errors.append(msg)
                print(f"error: {msg}", file=sys.stderr)
                continue
            result.metrics.replicate = rep
            rows.append(result.metrics)
            tag = f"w{w:g}_r{rep}"
            _write_embedding_csv(out_dir / f"embedding_{tag}.csv", result,
                                 result.graph.attributes)
            if result.spectrum is not None:
                _write_spectrum_csv(out_dir / f"spectrum_{tag}.csv", result.spectrum)
            if config.estimate_pairs > 0:
                _write_estimates_csv(out_dir / f"estimates_{tag}.csv", result.graph,
                                     result.state, result.metrics.epsilon,
                                     config.estimate_pairs, run_seed)

    n_ratios = config.algorithm.r + 1
    with (out_dir / "metrics.csv").open("w") as fh:
        header = ["omega_over_n", "replicate", "edges", "epsilon"]
        header += [f"eigratio_{k + 1}" for k in range(n_ratios)]
        header += ["eigen_gap", "nmse_b", "nmse_mu", "procrustes_residual"]
        fh.write(",".join(header) + "\n")
        for row in rows:
            vals = [_fmt(row.omega_over_n), str(row.replicate), str(row.edges), _fmt(row.epsilon)]
            vals += [_fmt(v) for v in row.eigen_ratios]
            vals += [_fmt(row.eigen_gap), _fmt(row.nmse_b), _fmt(row.nmse_mu), _fmt(row.procrustes)]
            fh.write(",".join(vals) + "\n")
    with (out_dir / "timings.csv").open("w") as fh:
        fh.write("omega_over_n,replicate,seconds\n")
        for row in rows:
            fh.write(f"{_fmt(row.omega_over_n)},{row.replicate},{row.wall_clock:.3f}\n")
    _write_manifest(out_dir, command, config_text, seed, errors)
    return rows


# ---------------------------------------------------------------------------
# Tree sweep
# ---------------------------------------------------------------------------

def tree_params_from_config(cfg: dict[str, str], omega: float) -> SparseParams:
    labels = tuple(cfg.get("tree.labels", "e").split(","))
    return SparseParams(
        r=int(_require(cfg, "tree.r")),
        a=float(_require(cfg, "tree.a")),
        b=float(_require(cfg, "tree.b")),
        labels=labels,
        mu=np.array(_floats(cfg.get("tree.mu", "1"))),
        nu=np.array(_floats(cfg.get("tree.nu", "1"))),
        omega=omega,
    )


def run_tree_sweep(cfg: dict[str, str], seed: int, out_dir: Path,
                   config_text: str = "") -> list[dict]:
    """Posterior-deviation and survival sweep over omega and depth.

    For each omega, trees are sampled once at the largest depth and the
    posterior is evaluated on depth truncations, which shares randomness
    across the depth column of the sweep. Emits tree_sweep.csv with columns
    omega,R,mean_abs_dev,ci_lo,ci_hi,survival.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    omegas = _floats(_require(cfg, "tree.omega"))
    depths = [int(v) for v in _floats(cfg.get("tree.depths", "2,4,6,8,10"))]
    n_trees = int(cfg.get("tree.trees", "200"))
    trials = int(cfg.get("tree.trials", "10000"))
    conditioning = cfg.get("tree.conditioning", "leaves-only")
    mode = cfg.get("tree.mode", "attribute-first")

    rows = []
    for wi, omega in enumerate(omegas):
        params = tree_params_from_config(cfg, omega)
        forest = sample_forest(params, max(depths), n_trees,
                               _derive_seed(seed, 30, wi), mode=mode)
        for R in depths:
            devs = np.array([
                posterior_deviation(root_posterior(tree, params, conditioning, depth=R))
                for tree in forest
            ])
            half = 1.959963984540054 * devs.std(ddof=1) / math.sqrt(n_trees)
            surv = coupling_survival(params, R, trials, _derive_seed(seed, 31, wi, R))
            rows.append({
                "omega": omega, "R": R,
                "mean_abs_dev": float(devs.mean()),
                "ci_lo": float(devs.mean() - half),
                "ci_hi": float(devs.mean() + half),
                "survival": surv.survival,
            })

    with (out_dir / "tree_sweep.csv").open("w") as fh:
        fh.write("omega,R,mean_abs_dev,ci_lo,ci_hi,survival\n")
        for row in rows:
            fh.write(",".join([
                _fmt(row["omega"]), str(row["R"]), _fmt(row["mean_abs_dev"]),
                _fmt(row["ci_lo"]), _fmt(row["ci_hi"]), _fmt(row["survival"]),
            ]) + "\n")
    _write_manifest(out_dir, "tree-sweep", config_text, seed, [])
    return rows
