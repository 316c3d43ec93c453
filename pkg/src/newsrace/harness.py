"""Reproducible Monte Carlo sweeps and their CSV output.

Every replication draws from its own substream keyed by
``(master_seed, kind, n, rep)``, and rows are sorted by ``(n, rep)`` before
emission, so output bytes do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import competition as comp
from .cm_graph import assign_weights, build_cm, largest_component
from .degrees import FiniteDegreeLaw, ParetoDegreeLaw, parse_degree_spec, parse_pk
from .theory import (
    NoRoot,
    classify_strong_graph,
    classify_strong_tree,
    classify_weak,
)
from .traversal import make_model
from .tree import Mode, estimate_tau_tail, simulate_tree_batch

SCHEMA_VERSION = 1
KINDS = ("graph-sweep", "tree-sweep", "tau-tail", "theory-table", "explosive")
_KIND_CODE = {k: i for i, k in enumerate(KINDS)}
DEFAULT_CURVE_OFFSETS = (-1.0, -0.5, 0.0, 0.5, 1.0, 2.0)


class ConfigError(ValueError):
    pass


class IoError(OSError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    degrees: str = "regular:3"
    dist_f: str = "exp:1"
    dist_r: str = "exp:1"
    coupling: str = "independent"
    delay: float = 0.0
    n_grid: list = field(default_factory=list)
    replications: int = 10
    eta: float = 0.05
    k_threshold: int = 100
    master_seed: int = 0
    out: str | None = None
    # tree-sweep / tau-tail
    offspring: str = "gw:2=1"
    gens: int = 10
    k_max: int = 20
    cap: int = 10_000_000
    # graph-sweep
    curve_offsets: list = field(default_factory=lambda: list(DEFAULT_CURVE_OFFSETS))
    reach_exponent: float = 0.5
    workers: int = 1
    timing: bool = False
    # theory-table
    models: list = field(default_factory=list)
    nus: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0 < self.eta < 1:
            raise ConfigError("eta must lie in (0, 1)")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schemaVersion {self.schema_version}")
        try:
            if self.kind != "theory-table":
                self.model()
            if self.kind in ("graph-sweep", "explosive"):
                src = parse_degree_spec(self.degrees)
                if not self.n_grid and src.n is None:
                    raise ConfigError("graph sweeps need n_grid or an n in the degree spec")
                if self.kind == "explosive":
                    law = src.law
                    if not (isinstance(law, ParetoDegreeLaw) and 2 < law.tau < 3 and law.kmin >= 2):
                        raise ConfigError("explosive scenario needs pareto-degree with 2 < tau < 3 and min >= 2")
            if self.kind == "tree-sweep":
                parse_offspring(self.offspring)
            for m in self.models:
                make_model(m["dist_f"], m["dist_r"], m.get("coupling", "independent"))
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        return self

    def model(self):
        return make_model(self.dist_f, self.dist_r, self.coupling)

    def grid(self) -> list[int]:
        if self.n_grid:
            return [int(n) for n in self.n_grid]
        return [parse_degree_spec(self.degrees).n]


_ALIASES = {"schemaVersion": "schema_version", "masterSeed": "master_seed", "nGrid": "n_grid"}


def load_config(path) -> ExperimentConfig:
    """Read a JSON config file (``schemaVersion`` 1)."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    kw = {}
    for key, val in raw.items():
        key = _ALIASES.get(key, key).replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        kw[key] = val
    if "kind" not in kw:
        raise ConfigError("config needs a 'kind'")
    try:
        return ExperimentConfig(**kw).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def substream(master_seed: int, kind: str, n: int, rep: int) -> tuple[np.random.Generator, int]:
    ss = np.random.SeedSequence(master_seed, spawn_key=(_KIND_CODE[kind], int(n), int(rep)))
    tag = int(ss.generate_state(1, np.uint64)[0])
    return np.random.Generator(np.random.PCG64(ss)), tag


def parse_offspring(text: str):
    """``gw:<pk>``, ``const:<k>``, ``um:<pk>``, ``um-regular:<r>``, ``um-pareto:<tau>:<min>``."""
    head, _, rest = text.strip().partition(":")
    try:
        if head == "gw":
            return parse_pk(rest), Mode.GALTON_WATSON
        if head == "const":
            return FiniteDegreeLaw.regular(int(rest)), Mode.GALTON_WATSON
        if head == "um":
            return parse_pk(rest), Mode.UNIMODULAR
        if head == "um-regular":
            return FiniteDegreeLaw.regular(int(rest)), Mode.UNIMODULAR
        if head == "um-pareto":
            tau, kmin = rest.split(":")
            return ParetoDegreeLaw(float(tau), int(kmin)), Mode.UNIMODULAR
    except ValueError as exc:
        raise ConfigError(f"bad offspring spec {text!r}: {exc}") from None
    raise ConfigError(f"unknown offspring spec {text!r}")


# ------------------------------------------------------------------ graphs


def _curve_key(off: float) -> str:
    return f"curve_{off:+g}"


def graph_columns(cfg: ExperimentConfig) -> list[str]:
    cols = ["n", "rep", "seed", "source", "component_size", "n_fake", "frac_fake", "a_n", "t_reach"]
    cols += [_curve_key(o) for o in cfg.curve_offsets]
    if cfg.timing:
        cols.append("wall_time")
    return cols


def _graph_task(args):
    cfg, n, rep = args
    t0 = time.perf_counter()
    rng, tag = substream(cfg.master_seed, cfg.kind, n, rep)
    src = parse_degree_spec(cfg.degrees)
    seq = src.sequence(rng, n)
    g = build_cm(seq, rng)
    wg = assign_weights(g, cfg.model(), rng)
    labels, sizes, giant = largest_component(g)
    while True:
        source = int(rng.integers(seq.n))
        if labels[source] == giant:
            break
    res = comp.race(wg, source, cfg.delay)
    a_n = math.ceil(seq.n**cfg.reach_exponent)
    t_reach = comp.time_to_reach(res, a_n)
    offs = np.asarray(cfg.curve_offsets, dtype=float)
    order = np.argsort(offs)
    if math.isfinite(t_reach):
        vals = np.empty(offs.size)
        vals[order] = comp.epidemic_curve(res, t_reach + offs[order])
    else:
        vals = np.full(offs.size, math.nan)
    row = {
        "n": seq.n,
        "rep": rep,
        "seed": tag,
        "source": source,
        "component_size": int(sizes[giant]),
        "n_fake": res.n_fake,
        "frac_fake": res.n_fake / seq.n,
        "a_n": a_n,
        "t_reach": t_reach,
    }
    row.update({_curve_key(o): float(v) for o, v in zip(cfg.curve_offsets, vals)})
    if cfg.timing:
        row["wall_time"] = time.perf_counter() - t0
    return row


def _run_tasks(fn, tasks, workers):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [fn(t) for t in tasks]


def run_graph_sweep(cfg: ExperimentConfig) -> list[dict]:
    if cfg.kind not in ("graph-sweep", "explosive"):
        raise ConfigError(f"run_graph_sweep cannot run kind {cfg.kind!r}")
    cfg.validate()
    tasks = [(cfg, n, rep) for n in cfg.grid() for rep in range(cfg.replications)]
    rows = _run_tasks(_graph_task, tasks, cfg.workers)
    rows.sort(key=lambda r: (r["n"], r["rep"]))
    return rows


# ------------------------------------------------------------------- trees

TREE_COLUMNS = ["rep", "seed", "k", "Zk", "ZkF", "ratio", "truncated", "conditioned_out"]


def run_tree_sweep(cfg: ExperimentConfig) -> list[dict]:
    """One row per (replication, generation).

    ``conditioned_out`` marks runs with ``Z_K = 0`` that survival
    conditioning discards; ``truncated`` marks runs that hit the cap.
    """
    if cfg.kind != "tree-sweep":
        raise ConfigError(f"run_tree_sweep cannot run kind {cfg.kind!r}")
    cfg.validate()
    law, mode = parse_offspring(cfg.offspring)
    model = cfg.model()
    rows = []
    for rep in range(cfg.replications):
        rng, tag = substream(cfg.master_seed, cfg.kind, 0, rep)
        b = simulate_tree_batch(law, mode, model, cfg.gens, cfg.delay, 1, rng, cfg.cap)
        trunc = int(b.truncated[0]) >= 0
        extinct = (not trunc) and b.Zk[0, -1] == 0
        for k in range(cfg.gens + 1):
            z, zf = int(b.Zk[0, k]), int(b.ZkF[0, k])
            rows.append(
                {
                    "rep": rep,
                    "seed": tag,
                    "k": k,
                    "Zk": z,
                    "ZkF": zf,
                    "ratio": zf / z if z > 0 else math.nan,
                    "truncated": int(trunc),
                    "conditioned_out": int(extinct),
                }
            )
    return rows


TAU_COLUMNS = ["k", "d", "p_hat", "stderr", "reps"]


def run_tau_tail(cfg: ExperimentConfig) -> list[dict]:
    rng, _ = substream(cfg.master_seed, "tau-tail", 0, 0)
    est = estimate_tau_tail(cfg.model(), cfg.delay, cfg.k_max, cfg.replications, rng)
    return [{"k": e.k, "d": e.d, "p_hat": e.p_hat, "stderr": e.stderr, "reps": e.reps} for e in est]


THEORY_COLUMNS = [
    "dist_f", "dist_r", "coupling", "nu", "mean_f", "mean_r", "rho_status", "h", "rho", "s_max",
    "weak", "lambda_f", "lambda_r", "strong_graph", "strong_tree",
]


def theory_record(model, nu: float) -> dict:
    weak = classify_weak(model, nu)
    rr = weak.rho_result
    try:
        sg = classify_strong_graph(model, nu)
        lf, lr, sg_out = sg.first, sg.second, sg.outcome.value
    except (NoRoot, ValueError):
        lf = lr = math.nan
        sg_out = "NotApplicable"
    return {
        **model.spec(),
        "nu": nu,
        "mean_f": model.fake.mean(),
        "mean_r": model.correct.mean(),
        "rho_status": rr.status.value,
        "h": rr.h,
        "rho": rr.rho,
        "s_max": rr.s_max,
        "weak": weak.outcome.value,
        "lambda_f": lf,
        "lambda_r": lr,
        "strong_graph": sg_out,
        "strong_tree": classify_strong_tree(model).outcome.value,
    }


def run_theory_table(cfg: ExperimentConfig) -> list[dict]:
    models = cfg.models or [{"dist_f": cfg.dist_f, "dist_r": cfg.dist_r, "coupling": cfg.coupling}]
    nus = cfg.nus or [2.0]
    return [
        theory_record(make_model(m["dist_f"], m["dist_r"], m.get("coupling", "independent")), float(nu))
        for m in models
        for nu in nus
    ]


def columns_for(cfg: ExperimentConfig) -> list[str]:
    if cfg.kind in ("graph-sweep", "explosive"):
        return graph_columns(cfg)
    return {"tree-sweep": TREE_COLUMNS, "tau-tail": TAU_COLUMNS, "theory-table": THEORY_COLUMNS}[cfg.kind]


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    cfg.validate()
    if cfg.kind in ("graph-sweep", "explosive"):
        return run_graph_sweep(cfg)
    if cfg.kind == "tree-sweep":
        return run_tree_sweep(cfg)
    if cfg.kind == "tau-tail":
        return run_tau_tail(cfg)
    return run_theory_table(cfg)


# --------------------------------------------------------------- estimators


def _by_n(records):
    groups: dict[int, list[dict]] = {}
    for r in records:
        groups.setdefault(int(r["n"]), []).append(r)
    return dict(sorted(groups.items()))


def strong_survival_probability(records, eta: float) -> dict[int, float]:
    """``P(nFake >= eta n)`` per n."""
    return {n: float(np.mean([r["n_fake"] >= eta * n for r in rows])) for n, rows in _by_n(records).items()}


def weak_survival_probability(records, K: int) -> dict[int, float]:
    """``P(nFake >= K)`` per n."""
    return {n: float(np.mean([r["n_fake"] >= K for r in rows])) for n, rows in _by_n(records).items()}


def mean_fraction(records) -> dict[int, float]:
    return {n: float(np.mean([r["frac_fake"] for r in rows])) for n, rows in _by_n(records).items()}


def estimate_intermediate_exponent(records) -> tuple[float, float]:
    """Least-squares slope of ``log median nFake`` on ``log n`` and its standard error."""
    groups = _by_n(records)
    if len(groups) < 3:
        raise InsufficientData(f"need at least 3 distinct n, got {len(groups)}")
    x = np.log([float(n) for n in groups])
    y = np.log([float(np.median([r["n_fake"] for r in rows])) for rows in groups.values()])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    se = math.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    return float(coef[0]), se


# ---------------------------------------------------------------------- CSV


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def emit_csv(records, path, columns=None) -> None:
    """Header plus one line per row; floats at 17 significant digits."""
    records = list(records)
    cols = list(columns) if columns is not None else (list(records[0]) if records else [])
    for i, r in enumerate(records):
        if list(r) != cols:
            raise ValueError(f"row {i} does not match the schema {cols}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in records:
                w.writerow([_fmt(r[c]) for c in cols])
    except OSError as exc:
        raise IoError(str(exc)) from None


def _parse(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["schemaVersion"] = d.pop("schema_version")
    return d
