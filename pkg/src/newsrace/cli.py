"""Command line entry point: ``newsrace <subcommand>``.

Exit codes: 0 on success, 2 on a configuration error, 3 on an I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys

from .harness import (
    ConfigError,
    ExperimentConfig,
    IoError,
    columns_for,
    emit_csv,
    load_config,
    run_experiment,
    theory_record,
)
from .traversal import make_model

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _model_args(p, with_delay=True):
    p.add_argument("--dist-f", required=True, help="fake-news weight law, e.g. exp:1")
    p.add_argument("--dist-r", required=True, help="correct-news weight law, e.g. exp:0.5")
    p.add_argument("--coupling", default="independent", choices=["independent", "comonotone", "countermonotone"])
    if with_delay:
        p.add_argument("--delay", type=float, default=0.0)


def _run_args(p):
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="newsrace", description="Fake vs correct news on random graphs and trees.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    th = sub.add_parser("theory", help="analytical verdicts")
    thsub = th.add_subparsers(dest="theory_cmd", required=True)
    cl = thsub.add_parser("classify", help="weak and strong survival verdicts")
    _model_args(cl, with_delay=False)
    cl.add_argument("--nu", type=float, required=True)
    cl.add_argument("--tol", type=float, default=1e-10)

    sim = sub.add_parser("simulate", help="Monte Carlo runs")
    simsub = sim.add_subparsers(dest="sim_cmd", required=True)
    g = simsub.add_parser("graph", help="race on configuration-model graphs")
    g.add_argument("--degrees", required=True, help="regular:r:n | iid:pk:n | pareto-degree:tau:min:n | file:path")
    g.add_argument("--n-grid", type=int, nargs="*", default=[])
    g.add_argument("--timing", action="store_true", help="add a wall_time column (breaks byte determinism)")
    g.add_argument("--workers", type=int, default=1)
    _model_args(g)
    _run_args(g)
    t = simsub.add_parser("tree", help="race on a branching-process tree")
    t.add_argument("--offspring", required=True, help="gw:pk | const:k | um:pk | um-regular:r | um-pareto:tau:min")
    t.add_argument("--gens", type=int, required=True)
    t.add_argument("--cap", type=int, default=10_000_000)
    _model_args(t)
    _run_args(t)

    tt = sub.add_parser("tau-tail", help="Monte Carlo P(tau_d > k)")
    tt.add_argument("--kmax", type=int, required=True)
    _model_args(tt)
    _run_args(tt)

    sw = sub.add_parser("sweep", help="run an experiment from a JSON config")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", default=None, help="override the config's output path")
    return ap


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if v == math.inf else format(v, ".17g")
    return str(v)


def _classify(ns) -> int:
    rec = theory_record(make_model(ns.dist_f, ns.dist_r, ns.coupling), ns.nu)
    for k, v in rec.items():
        print(f"{k}={_fmt(v)}")
    return EXIT_OK


def _config_from(ns) -> ExperimentConfig:
    common = dict(
        dist_f=ns.dist_f,
        dist_r=ns.dist_r,
        coupling=ns.coupling,
        delay=ns.delay,
        replications=ns.reps,
        master_seed=ns.seed,
        out=ns.out,
    )
    if ns.cmd == "tau-tail":
        return ExperimentConfig(kind="tau-tail", k_max=ns.kmax, **common)
    if ns.sim_cmd == "graph":
        return ExperimentConfig(
            kind="graph-sweep", degrees=ns.degrees, n_grid=ns.n_grid, timing=ns.timing, workers=ns.workers, **common
        )
    return ExperimentConfig(kind="tree-sweep", offspring=ns.offspring, gens=ns.gens, cap=ns.cap, **common)


def _run(cfg: ExperimentConfig) -> int:
    cfg.validate()
    if not cfg.out:
        raise ConfigError("no output path given")
    emit_csv(run_experiment(cfg), cfg.out, columns_for(cfg))
    return EXIT_OK


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.cmd == "theory":
            return _classify(ns)
        if ns.cmd == "sweep":
            cfg = load_config(ns.config)
            if ns.out:
                cfg.out = ns.out
            return _run(cfg)
        return _run(_config_from(ns))
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
