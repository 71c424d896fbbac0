#!/usr/bin/env python3
"""Produce the golden CSV fixtures consumed by the plots package tests.

Small fixed-seed harness runs, one per figure kind:
    embedding.csv  node scatter (ideal vs empirical panels)
    metrics.csv    error curves over the observation-rate sweep
    spectrum.csv   operator eigenvalue profile
    tree_sweep.csv posterior flatness and survival against omega

Regenerate with:  python scripts/make_golden_csvs.py
"""

import shutil
from pathlib import Path

from gsbm import experiment_from_config, parse_config, run_experiment, run_tree_sweep

GOLDEN = Path(__file__).resolve().parents[1] / "plots" / "golden"

EXP_CFG = """
schema_version = 1
model.n = 400
model.space.kind = unit_interval
model.kernel.kind = fourier
model.kernel.form = triangle
model.kernel.label_rule = two_label_2g
model.labels = +1,-1
model.omega_over_n = 0.6
algorithm.r = 3
algorithm.weighing = override
algorithm.weights = +1:1,-1:-1
sweep.omega_over_n = 0.2,0.4,0.6
seeds.replicates = 2
output.estimate_pairs = 50
"""

TREE_CFG = """
schema_version = 1
tree.r = 3
tree.a = 4
tree.b = 1
tree.labels = e
tree.mu = 1
tree.nu = 1
tree.omega = 2,4,6
tree.depths = 2,4,6
tree.trees = 120
tree.trials = 2000
"""


def main() -> int:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    work = GOLDEN / "_work"
    run_experiment(experiment_from_config(parse_config(EXP_CFG)), seed=0, out_dir=work,
                   config_text=EXP_CFG)
    shutil.copy(work / "embedding_w0.6_r0.csv", GOLDEN / "embedding.csv")
    shutil.copy(work / "metrics.csv", GOLDEN / "metrics.csv")
    shutil.copy(work / "spectrum_w0.6_r0.csv", GOLDEN / "spectrum.csv")
    run_tree_sweep(parse_config(TREE_CFG), seed=0, out_dir=work, config_text=TREE_CFG)
    shutil.copy(work / "tree_sweep.csv", GOLDEN / "tree_sweep.csv")
    shutil.rmtree(work)
    for name in ("embedding", "metrics", "spectrum", "tree_sweep"):
        path = GOLDEN / f"{name}.csv"
        print(f"wrote {path} ({path.stat().st_size} bytes)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
