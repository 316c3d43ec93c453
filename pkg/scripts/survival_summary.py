"""Run a graph-sweep config and print survival summaries per n.

    python3 scripts/survival_summary.py configs/graph_dies.json
"""

import argparse
import sys

from newsrace.harness import (
    InsufficientData,
    columns_for,
    emit_csv,
    load_config,
    mean_fraction,
    run_graph_sweep,
    strong_survival_probability,
    weak_survival_probability,
    estimate_intermediate_exponent,
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out", help="also write the raw rows here")
    args = ap.parse_args(argv)

    cfg = load_config(args.config)
    if cfg.kind != "graph-sweep":
        sys.exit(f"expected a graph-sweep config, got {cfg.kind}")
    rows = run_graph_sweep(cfg)
    if args.out:
        emit_csv(rows, args.out, columns_for(cfg))

    strong = strong_survival_probability(rows, cfg.eta)
    weak = weak_survival_probability(rows, cfg.k_threshold)
    frac = mean_fraction(rows)
    print(f"{'n':>8} {'P(strong)':>10} {'P(weak)':>10} {'mean frac':>10}")
    for n in strong:
        print(f"{n:>8} {strong[n]:>10.4f} {weak[n]:>10.4f} {frac[n]:>10.4f}")
    try:
        slope, se = estimate_intermediate_exponent(rows)
        print(f"log-log slope of median nFake: {slope:.3f} (se {se:.3f})")
    except InsufficientData as exc:
        print(f"no exponent fit: {exc}")


if __name__ == "__main__":
    main()
