"""Compare tree ratios E[Z_k^F / Z_k] with the walk estimate P(tau > k).

    python3 scripts/tree_vs_tail.py --dist-f exp:1 --dist-r exp:1.5 --gens 8
"""

import argparse
import math

import numpy as np

from newsrace.harness import ExperimentConfig, run_tau_tail, run_tree_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--offspring", default="const:2")
    ap.add_argument("--dist-f", default="exp:1")
    ap.add_argument("--dist-r", default="exp:1")
    ap.add_argument("--gens", type=int, default=8)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--walks", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    common = dict(dist_f=args.dist_f, dist_r=args.dist_r, master_seed=args.seed)
    tree = run_tree_sweep(ExperimentConfig(kind="tree-sweep", offspring=args.offspring, gens=args.gens, replications=args.reps, **common))
    tail = run_tau_tail(ExperimentConfig(kind="tau-tail", k_max=args.gens, replications=args.walks, **common))

    print(f"{'k':>3} {'tree mean':>10} {'walk':>10} {'z':>7}")
    for k in range(1, args.gens + 1):
        r = np.array([row["ratio"] for row in tree if row["k"] == k and math.isfinite(row["ratio"])])
        if r.size < 2:
            continue
        se = math.hypot(r.std(ddof=1) / math.sqrt(r.size), tail[k]["stderr"])
        z = (r.mean() - tail[k]["p_hat"]) / se if se > 0 else 0.0
        print(f"{k:>3} {r.mean():>10.5f} {tail[k]['p_hat']:>10.5f} {z:>7.2f}")


if __name__ == "__main__":
    main()
