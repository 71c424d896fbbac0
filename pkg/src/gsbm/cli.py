"""Command-line entry points.

Subcommands (each takes --config FILE, --seed N, --out DIR):

    generate    sample a labeled graph; writes edges.txt and attributes.txt
    spectrum    operator eigenvalues for the configured kernel; spectrum.csv
    infer       run the estimator on an edge-list file; estimates.csv
    experiment  full sweep pipeline; metrics/embedding/spectrum/estimates CSVs
    tree-sweep  posterior-deviation and survival sweep; tree_sweep.csv
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .harness import (
    ConfigError,
    _fmt,
    _write_manifest,
    _write_spectrum_csv,
    algorithm_from_config,
    experiment_from_config,
    model_spec_from_config,
    parse_config,
    run_experiment,
    run_tree_sweep,
)
from .model import (
    BlockKernel,
    FourierKernel,
    LabeledGraph,
    attributes_to_text,
    generate_graph,
    sample_attributes,
)
from .operator_spectrum import fourier_spectrum, nystrom_spectrum
from .spectral import (
    build_weighted_adjacency,
    draw_weighing,
    embed,
    estimate_all_pairs,
    select_epsilon,
    top_eigenpairs,
)


def _common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", required=True, type=Path, help="config file")
    sub.add_argument("--seed", type=int, default=0, help="root seed")
    sub.add_argument("--out", type=Path, default=Path("out"), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsbm", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "spectrum", "experiment", "tree-sweep"):
        _common(subs.add_parser(name))
    infer = subs.add_parser("infer")
    _common(infer)
    infer.add_argument("--graph", required=True, type=Path, help="edge-list file")
    infer.add_argument("--pairs", type=int, default=0,
                       help="estimate this many sampled pairs (0 = all ordered pairs)")
    return parser


def cmd_generate(cfg, text, args) -> int:
    spec = model_spec_from_config(cfg)
    attributes = sample_attributes(spec, args.seed)
    graph = generate_graph(spec, attributes, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "edges.txt").write_text(graph.to_edgelist())
    (args.out / "attributes.txt").write_text(attributes_to_text(attributes))
    _write_manifest(args.out, "generate", text, args.seed, [])
    print(f"wrote {graph.num_edges} edges for n={spec.n} to {args.out}")
    return 0


def cmd_spectrum(cfg, text, args) -> int:
    spec = model_spec_from_config(cfg)
    weighing = draw_weighing(spec.alphabet, args.seed)
    method = cfg.get("spectrum.method")
    if method is None:
        method = "fourier" if isinstance(spec.kernel, FourierKernel) else "nystrom"
    if method == "fourier":
        spectrum = fourier_spectrum(spec.kernel, weighing)
    elif method == "nystrom":
        spectrum = nystrom_spectrum(spec.space, spec.kernel, weighing,
                                    m=int(cfg.get("spectrum.m", "2000")))
    else:
        raise ConfigError(f"unknown spectrum method {method!r}")
    args.out.mkdir(parents=True, exist_ok=True)
    _write_spectrum_csv(args.out / "spectrum.csv", spectrum)
    _write_manifest(args.out, "spectrum", text, args.seed, [])
    print(f"wrote top {min(spectrum.eigenvalues.size, 100)} eigenvalues to {args.out}")
    return 0


def cmd_infer(cfg, text, args) -> int:
    graph = LabeledGraph.from_edgelist(args.graph.read_text())
    algo = algorithm_from_config(cfg)
    if algo.weighing == "override":
        weighing = draw_weighing(graph.alphabet, args.seed, override=algo.weight_override)
    else:
        weighing = draw_weighing(graph.alphabet, args.seed)
    wadj = build_weighted_adjacency(graph, weighing)
    state = embed(top_eigenpairs(wadj, algo.r, tol=algo.tol, seed=args.seed))
    if algo.epsilon_rule == "fixed":
        eps = float(algo.epsilon_value)
    else:
        eps = select_epsilon(state, seed=args.seed)

    n = graph.n
    if args.pairs > 0:
        rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(22,)))
        ii = rng.integers(0, n, size=args.pairs)
        jj = rng.integers(0, n - 1, size=args.pairs)
        jj = np.where(jj >= ii, jj + 1, jj)
        pairs = np.column_stack([ii, jj])
    else:
        grid_i, grid_j = np.nonzero(~np.eye(n, dtype=bool))
        pairs = np.column_stack([grid_i, grid_j])
    est = estimate_all_pairs(graph, state, eps, pairs=pairs)

    args.out.mkdir(parents=True, exist_ok=True)
    with (args.out / "estimates.csv").open("w") as fh:
        fh.write("i,j,bhat," + ",".join(f"muhat_{l}" for l in graph.alphabet.labels) + "\n")
        for row in range(pairs.shape[0]):
            vals = [str(pairs[row, 0]), str(pairs[row, 1]), _fmt(est.b_hat[row])]
            vals += [_fmt(v) for v in est.mu_hat[row]]
            fh.write(",".join(vals) + "\n")
    _write_manifest(args.out, "infer", text, args.seed, [])
    print(f"wrote {pairs.shape[0]} pair estimates (epsilon={eps:.6g}) to {args.out}")
    return 0


def cmd_experiment(cfg, text, args) -> int:
    config = experiment_from_config(cfg)
    rows = run_experiment(config, args.seed, args.out, config_text=text)
    print(f"ran {len(rows)} runs over {len(config.sweep)} sweep points; outputs in {args.out}")
    return 0


def cmd_tree_sweep(cfg, text, args) -> int:
    rows = run_tree_sweep(cfg, args.seed, args.out, config_text=text)
    print(f"wrote {len(rows)} sweep rows to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    text = args.config.read_text()
    try:
        cfg = parse_config(text)
        handler = {
            "generate": cmd_generate,
            "spectrum": cmd_spectrum,
            "infer": cmd_infer,
            "experiment": cmd_experiment,
            "tree-sweep": cmd_tree_sweep,
        }[args.command]
        return handler(cfg, text, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
