import json
import math

import numpy as np
import pytest

from newsrace.cm_graph import build_cm, largest_component
from newsrace.degrees import parse_degree_spec
from newsrace.harness import (
    ConfigError,
    ExperimentConfig,
    InsufficientData,
    IoError,
    columns_for,
    emit_csv,
    estimate_intermediate_exponent,
    load_config,
    read_csv,
    run_experiment,
    run_graph_sweep,
    run_tau_tail,
    run_theory_table,
    run_tree_sweep,
    strong_survival_probability,
    substream,
    weak_survival_probability,
)


def graph_cfg(**kw):
    base = dict(kind="graph-sweep", degrees="regular:3", dist_f="exp:1", dist_r="exp:1", n_grid=[100], replications=10)
    base.update(kw)
    return ExperimentConfig(**base)


def test_graph_rows_bounds():
    rows = run_graph_sweep(graph_cfg())
    assert len(rows) == 10
    assert all(1 <= r["n_fake"] <= 100 for r in rows)
    assert [r["rep"] for r in rows] == list(range(10))


def test_graph_fake_always_leads():
    rows = run_graph_sweep(graph_cfg(dist_f="det:1", dist_r="det:10", degrees="iid:1=0.3,2=0.4,3=0.3", n_grid=[200]))
    assert all(r["n_fake"] == r["component_size"] for r in rows)


def test_source_in_giant_component():
    cfg = graph_cfg(degrees="iid:1=0.6,3=0.4", n_grid=[300], replications=15)
    rows = run_graph_sweep(cfg)
    for r in rows:
        # rebuild the same graph from the same substream
        rng, tag = substream(cfg.master_seed, cfg.kind, r["n"], r["rep"])
        assert tag == r["seed"]
        seq = parse_degree_spec(cfg.degrees).sequence(rng, r["n"])
        labels, sizes, giant = largest_component(build_cm(seq, rng))
        assert labels[r["source"]] == giant and sizes[giant] == r["component_size"]


def test_determinism_and_workers(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    c = tmp_path / "c.csv"
    cfg = graph_cfg(n_grid=[50, 80], replications=6, master_seed=3)
    emit_csv(run_graph_sweep(cfg), a, columns_for(cfg))
    emit_csv(run_graph_sweep(cfg), b, columns_for(cfg))
    cfg2 = graph_cfg(n_grid=[50, 80], replications=6, master_seed=3, workers=2)
    emit_csv(run_graph_sweep(cfg2), c, columns_for(cfg2))
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_timing_column_optional():
    assert "wall_time" not in columns_for(graph_cfg())
    rows = run_graph_sweep(graph_cfg(timing=True, replications=2))
    assert all(r["wall_time"] >= 0 for r in rows)


def test_tree_sweep_examples():
    up = ExperimentConfig(kind="tree-sweep", offspring="const:2", dist_f="det:1", dist_r="det:2", gens=6, replications=3)
    assert all(r["ratio"] == 1 for r in run_tree_sweep(up))


def test_tree_sweep_matches_tau_tail():
    K, reps = 5, 4000
    tree = ExperimentConfig(kind="tree-sweep", offspring="const:2", gens=K, replications=reps, master_seed=11)
    rows = run_tree_sweep(tree)
    tail = run_tau_tail(ExperimentConfig(kind="tau-tail", k_max=K, replications=20000, master_seed=12))
    for k in range(1, K + 1):
        ratios = np.array([r["ratio"] for r in rows if r["k"] == k])
        se = math.hypot(ratios.std(ddof=1) / math.sqrt(reps), tail[k]["stderr"])
        assert abs(ratios.mean() - tail[k]["p_hat"]) < 3 * se


def test_tree_sweep_flags_truncation():
    cfg = ExperimentConfig(kind="tree-sweep", offspring="const:3", gens=8, cap=50, replications=2)
    rows = run_tree_sweep(cfg)
    assert all(r["truncated"] == 1 for r in rows)
    assert any(r["Zk"] == -1 for r in rows)


def test_tree_sweep_reports_extinction():
    cfg = ExperimentConfig(kind="tree-sweep", offspring="gw:0=0.5,2=0.5", gens=10, replications=50)
    rows = run_tree_sweep(cfg)
    assert any(r["conditioned_out"] == 1 for r in rows)


def test_theory_table():
    cfg = ExperimentConfig(kind="theory-table", models=[{"dist_f": "exp:1", "dist_r": "exp:2"}], nus=[2, 3])
    rows = run_theory_table(cfg)
    assert [r["nu"] for r in rows] == [2.0, 3.0]
    assert rows[0]["strong_graph"] == "Dies" and rows[0]["weak"] == "Survives(ii)"
    assert list(rows[0]) == columns_for(cfg)


def test_exponent_synthetic():
    ns = [1000, 10000, 100000]
    rows = [{"n": n, "n_fake": n} for n in ns for _ in range(3)]
    slope, se = estimate_intermediate_exponent(rows)
    assert slope == pytest.approx(1.0, abs=1e-12)
    rows = [{"n": n, "n_fake": math.ceil(math.sqrt(n))} for n in ns]
    assert estimate_intermediate_exponent(rows)[0] == pytest.approx(0.5, abs=0.01)
    with pytest.raises(InsufficientData):
        estimate_intermediate_exponent(rows[:2])


def test_survival_estimators_monotone():
    rows = run_graph_sweep(graph_cfg(n_grid=[200], replications=30, dist_r="exp:1.2"))
    etas = np.linspace(0.01, 0.9, 20)
    ps = [strong_survival_probability(rows, e)[200] for e in etas]
    assert ps == sorted(ps, reverse=True)
    ks = [1, 2, 5, 10, 50, 100]
    qs = [weak_survival_probability(rows, k)[200] for k in ks]
    assert qs == sorted(qs, reverse=True) and qs[0] == 1.0


def test_emit_csv(tmp_path):
    p = tmp_path / "e.csv"
    emit_csv([], p, ["a", "b"])
    assert p.read_bytes() == b"a,b\n"
    emit_csv([{"a": 1, "b": 0.1}], p)
    assert p.read_text(encoding="utf-8").splitlines() == ["a,b", "1,0.10000000000000001"]
    vals = [{"x": float(v), "k": i, "s": "Dies"} for i, v in enumerate(np.random.default_rng(0).standard_normal(50) * 1e-7)]
    vals.append({"x": math.inf, "k": 99, "s": "Survives(i)"})
    emit_csv(vals, p)
    back = read_csv(p)
    assert all(a["x"] == b["x"] and a["k"] == b["k"] and a["s"] == b["s"] for a, b in zip(vals, back))
    with pytest.raises(ValueError):
        emit_csv([{"a": 1}, {"b": 2}], p)
    with pytest.raises(IoError):
        emit_csv([{"a": 1}], tmp_path / "missing" / "x.csv")


def test_config_loading(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"schemaVersion": 1, "kind": "tau-tail", "dist_f": "exp:1", "dist_r": "exp:2", "k_max": 3, "replications": 100}))
    cfg = load_config(p)
    rows = run_experiment(cfg)
    assert [r["k"] for r in rows] == [0, 1, 2, 3]
    for bad in (
        {"kind": "nope"},
        {"kind": "tau-tail", "bogus": 1},
        {"kind": "tau-tail", "replications": 0},
        {"kind": "tau-tail", "eta": 1.5},
        {"kind": "tau-tail", "dist_f": "gamma:1"},
        {"kind": "graph-sweep", "degrees": "regular:3"},
        {"kind": "explosive", "degrees": "pareto-degree:3.5:2", "n_grid": [100]},
        {"schemaVersion": 2, "kind": "tau-tail"},
    ):
        p.write_text(json.dumps(bad))
        with pytest.raises(ConfigError):
            load_config(p)
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(IoError):
        load_config(tmp_path / "absent.json")


def test_median_fraction_falls_with_n():
    # lambda^R > lambda^F: strong survival fails, so the typical fraction shrinks
    cfg = graph_cfg(dist_r="exp:2", n_grid=[1000, 10000], replications=200, master_seed=5)
    rows = run_graph_sweep(cfg)
    med = {n: np.median([r["frac_fake"] for r in rows if r["n"] == n]) for n in (1000, 10000)}
    assert med[10000] < med[1000]
