import math

import numpy as np
import pytest

from newsrace.degrees import FiniteDegreeLaw, parse_pk
from newsrace.traversal import Deterministic, JointModel, make_model
from newsrace.tree import (
    CapExceeded,
    Mode,
    decay_rate,
    estimate_tau_tail,
    simulate_tree,
    simulate_tree_batch,
    tree_ratio_stats,
)

TWO = FiniteDegreeLaw.regular(2)
# every increment is -1; infeasible as a model, valid as a walk
BEHIND = JointModel.unchecked(Deterministic(2.0), Deterministic(1.0))


def test_always_ahead(rng):
    res = simulate_tree(TWO, Mode.GALTON_WATSON, make_model("det:1", "det:2"), 8, 0.0, rng)
    assert list(res.Zk) == [2**k for k in range(9)]
    assert list(res.ZkF) == list(res.Zk)
    assert np.all(res.ratio == 1.0)


def test_always_behind(rng):
    res = simulate_tree(TWO, Mode.GALTON_WATSON, BEHIND, 6, 0.0, rng)
    assert list(res.ZkF[1:]) == [0] * 6
    assert list(res.Zk) == [2**k for k in range(7)]


def test_delay_lets_first_steps_through(rng):
    # increments are -1; with d = 2.5 the walk dies at step 3
    res = simulate_tree(TWO, Mode.GALTON_WATSON, BEHIND, 5, 2.5, rng)
    assert list(res.ZkF) == [1, 2, 4, 0, 0, 0]


def test_first_generation_half(rng):
    b = simulate_tree_batch(TWO, Mode.GALTON_WATSON, make_model("exp:1", "exp:1"), 1, 0.0, 10**5, rng)
    x = b.ZkF[:, 1].astype(float)
    assert abs(x.mean() - 1.0) < 3 * x.std(ddof=1) / math.sqrt(x.size)


def test_unimodular_root_and_forward(rng):
    law = parse_pk("2=0.5,4=0.5")
    b = simulate_tree_batch(law, Mode.UNIMODULAR, make_model("det:1", "det:2"), 2, 0.0, 20000, rng)
    assert set(np.unique(b.Zk[:, 1])) == {2, 4}
    # E[Z_2] = E[D] * nu = 3 * 7/3
    z2 = b.Zk[:, 2].astype(float)
    assert abs(z2.mean() - 7.0) < 4 * z2.std(ddof=1) / math.sqrt(z2.size)


def test_invariants(rng):
    law = parse_pk("0=0.2,1=0.2,3=0.6")
    b = simulate_tree_batch(law, Mode.GALTON_WATSON, make_model("exp:1", "exp:0.8"), 10, 0.3, 500, rng)
    assert np.all(b.Zk[:, 0] == 1) and np.all(b.ZkF[:, 0] == 1)
    assert np.all(b.ZkF <= b.Zk)
    stats = tree_ratio_stats(b, condition_on_survival=True)
    assert stats["used"] + stats["rejected"] + stats["truncated"] == 500
    assert stats["rejected"] > 0


def test_cap(rng):
    with pytest.raises(CapExceeded) as info:
        simulate_tree(FiniteDegreeLaw.regular(3), Mode.GALTON_WATSON, make_model("det:1", "det:2"), 10, 0.0, rng, cap=100)
    r = info.value.result
    assert r.truncated_at == 5 and r.Zk[5] == 243 and r.Zk[6] == -1
    b = simulate_tree_batch(FiniteDegreeLaw.regular(3), Mode.GALTON_WATSON, make_model("exp:1", "exp:1"), 6, 0.0, 4, rng, cap=100)
    assert np.all(b.truncated == 5)
    assert tree_ratio_stats(b)["truncated"] == 4


def test_tau_tail_examples(rng):
    up = estimate_tau_tail(make_model("det:1", "det:2"), 0.0, 10, 100, rng)
    assert all(e.p_hat == 1.0 for e in up)
    down = estimate_tau_tail(BEHIND, 0.0, 10, 100, rng)
    assert all(e.p_hat == 0.0 for e in down[1:])
    sym = estimate_tau_tail(make_model("exp:1", "exp:1"), 0.0, 1, 10**5, rng)
    assert abs(sym[1].p_hat - 0.5) < 3 * sym[1].stderr


def test_tau_tail_monotone(rng):
    est = estimate_tau_tail(make_model("unif:0:2", "exp:1.2"), 0.5, 30, 2000, rng)
    p = [e.p_hat for e in est]
    assert p == sorted(p, reverse=True)


def test_positive_drift_dichotomy(rng):
    m = make_model("exp:1", "exp:0.7")
    est = estimate_tau_tail(m, 0.0, 20, 20000, rng)
    assert min(e.p_hat for e in est[10:]) > 0.2
    b = simulate_tree_batch(TWO, Mode.GALTON_WATSON, m, 20, 0.0, 200, rng)
    assert tree_ratio_stats(b)["mean_ratio"][20] > 0.5 * est[20].p_hat


def test_negative_drift_decay(rng):
    m = make_model("exp:1", "exp:1.5")
    est = estimate_tau_tail(m, 0.0, 20, 50000, rng)
    assert est[20].p_hat <= 0.5 * est[5].p_hat
    # the slope approaches log rho slowly; rho = 4*2.5/3.5^2 converges by k ~ 20
    est = estimate_tau_tail(make_model("exp:1", "exp:2.5"), 0.0, 20, 400000, rng)
    assert decay_rate(est, 8) == pytest.approx(math.log(40 / 49), abs=0.05)


def test_bounded_normalized_ratio(rng):
    m = make_model("exp:1", "exp:1.3")
    est = estimate_tau_tail(m, 0.0, 8, 50000, rng)
    b = simulate_tree_batch(TWO, Mode.GALTON_WATSON, m, 8, 0.0, 2000, rng)
    q = {}
    for k in (4, 8):
        g = 2 * est[k].p_hat
        q[k] = np.quantile(b.ZkF[:, k] / (g * b.Zk[:, k]), 0.99)
    assert math.isfinite(q[8]) and q[8] <= 3 * q[4] + 1
