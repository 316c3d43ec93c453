"""Numerical survival criteria for fake news.

* weak survival: compare ``rho = inf_{s>=0} psi(s)`` with ``1/nu``;
* strong survival on the graph: compare the Malthusian parameters;
* strong survival on a tree: compare the means;
* the stable-age (exponentially tilted) quantities behind the graph result.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .traversal import (
    Coupling,
    Deterministic,
    Exponential,
    JointModel,
    Marginal,
    Pareto,
    Uniform,
    mixed_moment,
    psi,
    psi_deriv,
    sample_pairs,
)

INF = math.inf
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NoRoot(ValueError):
    """The Malthusian equation has no positive solution."""


class RhoStatus(enum.Enum):
    INTERIOR_MIN = "InteriorMin"
    DRIFT_POSITIVE = "DriftPositive"
    DIVERGENT_ALL = "DivergentAll"
    BOUNDARY_NOT_COVERED = "BoundaryNotCovered"


@dataclass(frozen=True)
class RhoResult:
    status: RhoStatus
    h: float
    rho: float
    s_max: float


def golden_min(f, a: float, b: float, tol: float) -> float:
    """Minimizer of a unimodal ``f`` on ``[a, b]`` to absolute tolerance ``tol``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _deriv_root(deriv, hi: float) -> float:
    # psi' < 0 at 0 and >= 0 at hi; bisect until the bracket stops shrinking
    lo = 0.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        if deriv(mid) < 0:
            lo = mid
        else:
            hi = mid


def minimize_transform(fn, s_max: float, drift: float, tol: float = 1e-10, deriv=None) -> RhoResult:
    """Locate ``h`` and ``rho`` for a convex transform ``fn`` with ``fn(0) = 1``.

    ``drift`` is ``E[L^R] - E[L^F]``; ``s_max`` the right end of the domain.
    With ``deriv`` the minimizer is the root of the derivative, which is far
    better conditioned than comparing function values near a flat minimum.
    """
    if drift > 0:
        return RhoResult(RhoStatus.DRIFT_POSITIVE, math.nan, math.nan, s_max)
    if s_max <= 0:
        return RhoResult(RhoStatus.DIVERGENT_ALL, math.nan, math.nan, 0.0)
    if drift == 0:
        # psi'(0) = 0 and psi convex: minimum sits at the origin
        return RhoResult(RhoStatus.INTERIOR_MIN, 0.0, 1.0, s_max)
    if math.isinf(s_max):
        b = 1.0
        while not fn(b) > 1.0:
            b *= 2.0
            if b > 2.0**60:
                return RhoResult(RhoStatus.BOUNDARY_NOT_COVERED, INF, math.nan, s_max)
        hi = b
    else:
        # walk toward s_max; once fn > 1 = fn(0), convexity puts the minimum inside
        for k in range(1, 44):
            hi = s_max * (1.0 - 2.0**-k)
            if fn(hi) > 1.0:
                break
        else:
            # still decreasing at the boundary: no critical point inside
            eps = max(s_max * 1e-7, tol)
            if fn(hi) < fn(hi - eps):
                return RhoResult(RhoStatus.BOUNDARY_NOT_COVERED, s_max, fn(hi), s_max)
    if deriv is not None and deriv(hi) >= 0:
        h = _deriv_root(deriv, hi)
    else:
        h = golden_min(fn, 0.0, hi, tol * max(1.0, hi) if math.isinf(s_max) else tol)
    return RhoResult(RhoStatus.INTERIOR_MIN, h, fn(h), s_max)


def solve_rho(model: JointModel, tol: float = 1e-10) -> RhoResult:
    drift = model.correct.mean() - model.fake.mean()
    if math.isnan(drift):  # both means infinite
        drift = 0.0
    _, s_max = model.psi_domain()
    return minimize_transform(lambda s: psi(model, s), s_max, drift, tol, deriv=lambda s: psi_deriv(model, s))


@dataclass(frozen=True)
class MalthusReport:
    lam: float
    residual: float


def solve_malthusian(m: Marginal, nu: float, tol: float = 1e-12) -> MalthusReport:
    """Positive root of ``E[exp(-lam L)] = 1/nu`` by bisection."""
    if not nu > 1:
        raise ValueError(f"nu must exceed 1, got {nu}")
    target = 1.0 / nu
    if m.atom_at_zero() >= target:
        raise NoRoot(f"P(L = 0) = {m.atom_at_zero()} >= 1/nu = {target}")
    if isinstance(m, Exponential):
        lam = m.rate * (nu - 1.0)
        return MalthusReport(lam, abs(m.mgf(-lam) - target))
    if isinstance(m, Deterministic):
        lam = math.log(nu) / m.value
        return MalthusReport(lam, abs(m.mgf(-lam) - target))
    return malthusian_bisect(m, nu, tol)


def malthusian_bisect(m: Marginal, nu: float, tol: float = 1e-12) -> MalthusReport:
    """Bisection for the Malthusian root, skipping any closed form."""
    target = 1.0 / nu
    g = lambda lam: m.mgf(-lam) - target  # strictly decreasing from 1 - 1/nu
    lo, hi = 0.0, 1.0
    while g(hi) > 0:
        lo, hi = hi, 2.0 * hi
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi and abs(g(mid)) <= tol:
            break
    lam = lo if abs(g(lo)) <= abs(g(hi)) else hi
    return MalthusReport(lam, abs(g(lam)))


class WeakOutcome(enum.Enum):
    SURVIVES_I = "Survives(i)"
    SURVIVES_II = "Survives(ii)"
    SURVIVES_III = "Survives(iii)"
    SURVIVES_INFINITE_NU = "Survives(infinite-nu)"
    DIES_II = "Dies(ii)"
    NOT_COVERED = "NotCovered"

    @property
    def survives(self) -> bool:
        return self.value.startswith("Survives")


@dataclass(frozen=True)
class WeakVerdict:
    outcome: WeakOutcome
    mean_r: float
    mean_f: float
    rho: float
    inv_nu: float
    rho_result: RhoResult | None = None


def weak_verdict(rr: RhoResult, nu: float, mean_r: float, mean_f: float) -> WeakVerdict:
    """Weak-survival classification from an already located ``rho``."""
    inv_nu = 0.0 if math.isinf(nu) else 1.0 / nu
    if rr.status is RhoStatus.DRIFT_POSITIVE:
        out = WeakOutcome.SURVIVES_I
    elif rr.status is RhoStatus.DIVERGENT_ALL:
        out = WeakOutcome.SURVIVES_III
    elif rr.status is RhoStatus.BOUNDARY_NOT_COVERED:
        out = WeakOutcome.NOT_COVERED
    elif rr.rho > inv_nu:
        out = WeakOutcome.SURVIVES_II
    else:
        out = WeakOutcome.DIES_II
    if math.isinf(nu) and out is not WeakOutcome.DIES_II:
        out = WeakOutcome.SURVIVES_INFINITE_NU
    return WeakVerdict(out, mean_r, mean_f, rr.rho, inv_nu, rr)


def classify_weak(model: JointModel, nu: float, tol: float = 1e-10) -> WeakVerdict:
    if not nu > 1:
        raise ValueError(f"nu must exceed 1, got {nu}")
    return weak_verdict(solve_rho(model, tol), nu, model.correct.mean(), model.fake.mean())


class StrongOutcome(enum.Enum):
    SURVIVES = "Survives"
    DIES = "Dies"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class StrongVerdict:
    outcome: StrongOutcome
    first: float  # lambda^F, or E[L^F] for the tree criterion
    second: float  # lambda^R, or E[L^R]


def classify_strong_graph(model: JointModel, nu: float, tol: float = 1e-9) -> StrongVerdict:
    """Compare Malthusian parameters; ``tol`` is relative."""
    if not (nu > 1 and math.isfinite(nu)):
        raise ValueError(f"graph criterion needs finite nu > 1, got {nu}")
    lf = solve_malthusian(model.fake, nu).lam
    lr = solve_malthusian(model.correct, nu).lam
    gap = tol * max(lf, lr)
    if lr < lf - gap:
        out = StrongOutcome.SURVIVES
    elif lr > lf + gap:
        out = StrongOutcome.DIES
    else:
        out = StrongOutcome.BOUNDARY
    return StrongVerdict(out, lf, lr)


def classify_strong_tree(model: JointModel) -> StrongVerdict:
    mf, mr = model.fake.mean(), model.correct.mean()
    return StrongVerdict(StrongOutcome.SURVIVES if mr > mf else StrongOutcome.DIES, mf, mr)


# ---------------------------------------------------------------- stable age


def stable_age_mean(m: Marginal, nu: float, lam: float) -> float:
    """Mean of the tilted law ``nu e^{-lam y} F(dy)``, i.e. ``nu E[L e^{-lam L}]``."""
    return nu * m.mgf_deriv(-lam)


def tilted_correct_mean(model: JointModel, nu: float, lam: float) -> float:
    """``E[bar L^R] = nu E[L^R e^{-lam L^F}]``."""
    return nu * mixed_moment(model, lam)


def lifetime_profile(m: Marginal, lam: float, x: float) -> float:
    """``H(x) = int_0^inf e^{-lam z} P(L in (z, z+x)) dz``."""
    if x <= 0:
        return 0.0
    if isinstance(m, Exponential):
        if math.isinf(x):
            return 1.0 / (lam + m.rate)
        return -math.expm1(-m.rate * x) / (lam + m.rate)
    if isinstance(m, Deterministic):
        c = m.value
        lo = 0.0 if math.isinf(x) else max(0.0, c - x)
        return (math.exp(-lam * lo) - math.exp(-lam * c)) / lam

    def window(z):
        upper = 1.0 if math.isinf(x) else float(m.cdf(z + x))
        return math.exp(-lam * z) * (upper - float(m.cdf(z)))

    if isinstance(m, Uniform):
        pts = sorted({p for p in (m.lo, m.hi, m.lo - x, m.hi - x) if 0 < p < m.hi})
        val, _ = integrate.quad(window, 0.0, m.hi, points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val
    if isinstance(m, Pareto):
        pts = [p for p in (m.scale - x,) if p > 0]
        head, _ = integrate.quad(window, 0.0, m.scale, points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=200)
        tail, _ = integrate.quad(window, m.scale, INF, epsabs=1e-13, epsrel=1e-12, limit=400)
        return head + tail
    raise TypeError(f"unsupported marginal {m!r}")


@dataclass
class StableAgeReport:
    lambda_f: float
    nu: float
    nu_bar_f: float
    e_lbar_r: float
    h_values: dict = field(default_factory=dict)
    h_inf: float = math.nan
    p_star_hat: float = math.nan
    p_star_se: float = math.nan
    horizon: int = 0
    p_star_t: dict = field(default_factory=dict)
    acceptance_rate: float = math.nan
    acceptance_se: float = math.nan
    truncation_bound: float = math.nan


@dataclass
class TiltedWalkSample:
    alive: np.ndarray  # never went negative up to the horizon
    fake_time_at_kill: np.ndarray  # bar S^F at sigma, nan for survivors
    proposals: int
    accepted: int
    inc_mean: float
    inc_var: float


def _tilted_pairs(model, lam, rng, need, stats):
    """``need`` pairs from the law ``nu e^{-lam lF} dF(lF, lR)`` by rejection."""
    got_f, got_r, have = [], [], 0
    while have < need:
        batch = max(1024, int(1.3 * (need - have) / max(stats["rate"], 1e-3)))
        lf, lr = sample_pairs(model, rng, batch)
        keep = rng.random(batch) < np.exp(-lam * lf)
        stats["proposals"] += batch
        stats["accepted"] += int(keep.sum())
        stats["rate"] = stats["accepted"] / stats["proposals"]
        got_f.append(lf[keep])
        got_r.append(lr[keep])
        have += int(keep.sum())
    lf, lr = np.concatenate(got_f)[:need], np.concatenate(got_r)[:need]
    return lf, lr


def tilted_walk(model: JointModel, lam: float, reps: int, horizon: int, rng: np.random.Generator, block: int = 64):
    """Walk ``bar S^R - bar S^F`` under the stable-age law until it goes negative."""
    alive = np.ones(reps, dtype=bool)
    walk = np.zeros(reps)
    fake_clock = np.zeros(reps)
    kill_time = np.full(reps, np.nan)
    stats = {"proposals": 0, "accepted": 0, "rate": 0.5}
    s1 = s2 = 0.0
    cnt = 0
    done = 0
    while done < horizon:
        steps = min(block, horizon - done)
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        lf, lr = _tilted_pairs(model, lam, rng, idx.size * steps, stats)
        inc = (lr - lf).reshape(idx.size, steps)
        clk = lf.reshape(idx.size, steps)
        s1 += inc.sum()
        s2 += np.square(inc).sum()
        cnt += inc.size
        path = walk[idx, None] + np.cumsum(inc, axis=1)
        fclock = fake_clock[idx, None] + np.cumsum(clk, axis=1)
        neg = path < 0
        hit = neg.any(axis=1)
        first = np.argmax(neg, axis=1)
        dead = idx[hit]
        kill_time[dead] = fclock[hit, first[hit]]
        alive[dead] = False
        live = ~hit
        walk[idx[live]] = path[live, -1]
        fake_clock[idx[live]] = fclock[live, -1]
        done += steps
    mu = s1 / max(cnt, 1)
    var = s2 / max(cnt, 1) - mu * mu
    return TiltedWalkSample(alive, kill_time, stats["proposals"], stats["accepted"], mu, var)


def stable_age_report(
    model: JointModel,
    nu: float,
    h_grid=(),
    T=(),
    reps: int = 2000,
    horizon: int = 10_000,
    rng: np.random.Generator | None = None,
) -> StableAgeReport:
    """Stable-age means, lifetime profile and the non-blocking probability p*.

    ``p_star_hat`` is a truncated-horizon estimate of ``P(bar sigma = inf)``
    and can only overestimate; ``truncation_bound`` is a Chebyshev-style
    heuristic ``var / (drift^2 horizon)`` for that bias.
    """
    if not (nu > 1 and math.isfinite(nu)):
        raise ValueError(f"need finite nu > 1, got {nu}")
    lam = solve_malthusian(model.fake, nu).lam
    rep = StableAgeReport(
        lambda_f=lam,
        nu=nu,
        nu_bar_f=stable_age_mean(model.fake, nu, lam),
        e_lbar_r=tilted_correct_mean(model, nu, lam),
    )
    rep.h_values = {float(x): lifetime_profile(model.fake, lam, float(x)) for x in h_grid}
    rep.h_inf = lifetime_profile(model.fake, lam, INF)
    if reps > 0 and horizon > 0:
        rng = np.random.default_rng() if rng is None else rng
        w = tilted_walk(model, lam, reps, horizon, rng)
        p = float(w.alive.mean())
        rep.p_star_hat = p
        rep.p_star_se = math.sqrt(p * (1 - p) / reps)
        rep.horizon = horizon
        killed = w.fake_time_at_kill[~w.alive]
        rep.p_star_t = {float(t): p + float(np.sum(killed > t)) / reps for t in T}
        rep.acceptance_rate = w.accepted / w.proposals
        q = 1.0 / nu
        rep.acceptance_se = math.sqrt(q * (1 - q) / w.proposals)
        rep.truncation_bound = w.inc_var / (w.inc_mean**2 * horizon) if w.inc_mean > 0 else INF
    return rep
