#!/usr/bin/env python3
"""Run the full experiment set: unlabeled and labeled sweeps at n = 1500
plus the sparse-regime tree sweep. Outputs land under --out (default
out/), one subdirectory per experiment, all reproducible from --seed.

Figures are rendered separately by the plots package from these CSVs.
"""

import argparse
from pathlib import Path

from gsbm import experiment_from_config, parse_config, run_experiment, run_tree_sweep

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    for name in ("triangle_unlabeled", "triangle_labeled"):
        text = (CONFIG_DIR / f"{name}.cfg").read_text()
        config = experiment_from_config(parse_config(text))
        out = args.out / name
        print(f"== {name} -> {out}")
        rows = run_experiment(config, args.seed, out, config_text=text)
        for row in rows:
            mu = "" if row.nmse_mu is None else f"  nmse_mu={row.nmse_mu:.4f}"
            print(f"  w={row.omega_over_n:g} rep={row.replicate}"
                  f"  nmse_b={row.nmse_b:.4f}{mu}  ({row.wall_clock:.1f}s)")

    text = (CONFIG_DIR / "tree_sweep.cfg").read_text()
    out = args.out / "tree_sweep"
    print(f"== tree_sweep -> {out}")
    for row in run_tree_sweep(parse_config(text), args.seed, out, config_text=text):
        print(f"  omega={row['omega']:g} R={row['R']}"
              f"  dev={row['mean_abs_dev']:.5f}  survival={row['survival']:.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
