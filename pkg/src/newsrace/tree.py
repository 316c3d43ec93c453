"""Fake news on a branching-process tree: a branching random walk with killing.

Every lineage carries the walk ``S_k = sum (lR - lF)`` along its ancestry.
A generation-k vertex hears fake news first iff ``S_j > -d`` for every
``j <= k``.  Killed subtrees are tracked only as head counts, which keeps
memory proportional to the surviving population.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .degrees import DegreeDistribution
from .traversal import JointModel, sample_pairs

DEFAULT_CAP = 10_000_000


class Mode(enum.Enum):
    GALTON_WATSON = "gw"  # every vertex draws from the given law
    UNIMODULAR = "um"  # root draws D, everyone else D* - 1


class CapExceeded(RuntimeError):
    def __init__(self, result):
        super().__init__(f"generation population exceeded the cap at k={result.truncated_at}")
        self.result = result


@dataclass
class TreeCompetitionResult:
    mode: Mode
    K: int
    d: float
    Zk: np.ndarray
    ZkF: np.ndarray
    truncated_at: int | None = None

    @property
    def truncated(self) -> bool:
        return self.truncated_at is not None

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.Zk > 0, self.ZkF / np.maximum(self.Zk, 1), np.nan)


@dataclass(frozen=True)
class TauTailEstimate:
    k: int
    d: float
    p_hat: float
    stderr: float
    reps: int


def offspring_mean(law: DegreeDistribution, mode: Mode) -> float:
    return law.m1 if mode is Mode.GALTON_WATSON else law.nu


def _draw(law, mode, rng, size, root):
    if mode is Mode.GALTON_WATSON or root:
        return law.sample(rng, size)
    return law.sample_forward(rng, size)


@dataclass
class TreeBatch:
    """Per-replication counts from :func:`simulate_tree_batch`."""

    Zk: np.ndarray  # shape (reps, K+1)
    ZkF: np.ndarray
    truncated: np.ndarray = field(default=None)

    @property
    def reps(self) -> int:
        return self.Zk.shape[0]


def simulate_tree_batch(
    law: DegreeDistribution,
    mode: Mode,
    model: JointModel,
    K: int,
    d: float,
    reps: int,
    rng: np.random.Generator,
    cap: int = DEFAULT_CAP,
) -> TreeBatch:
    """Run ``reps`` independent trees to generation ``K`` in one vectorized pass.

    ``cap`` bounds the generation size of each replication; replications
    that hit it are flagged and stop evolving.
    """
    if K < 0 or cap < 1 or reps < 1:
        raise ValueError("need K >= 0, cap >= 1 and reps >= 1")
    Zk = np.zeros((reps, K + 1), dtype=np.int64)
    ZkF = np.zeros((reps, K + 1), dtype=np.int64)
    Zk[:, 0] = ZkF[:, 0] = 1
    truncated = np.full(reps, -1, dtype=np.int64)

    # surviving lineages: owning replication and walk value
    owner = np.arange(reps, dtype=np.int64)
    walk = np.zeros(reps)
    killed = np.zeros(reps, dtype=np.int64)  # head count of killed subtrees
    for k in range(1, K + 1):
        root = k == 1
        kids = _draw(law, mode, rng, owner.size, root)
        child_owner = np.repeat(owner, kids)
        lf, lr = sample_pairs(model, rng, child_owner.size)
        child_walk = np.repeat(walk, kids) + (lr - lf)
        alive = child_walk > -d
        newly_killed = np.bincount(child_owner[~alive], minlength=reps)

        # killed subtrees only branch
        if killed.any():
            total = int(killed.sum())
            if total > 0:
                kk = _draw(law, mode, rng, total, False)
                killed = np.bincount(np.repeat(np.arange(reps), killed), weights=kk, minlength=reps).astype(np.int64)
        owner, walk = child_owner[alive], child_walk[alive]
        killed = killed + newly_killed
        survivors = np.bincount(owner, minlength=reps)
        ZkF[:, k] = survivors
        Zk[:, k] = survivors + killed

        over = (Zk[:, k] > cap) & (truncated < 0)
        if over.any():
            truncated[over] = k
            drop = truncated >= 0
            keep = ~drop[owner]
            owner, walk = owner[keep], walk[keep]
            killed[drop] = 0
        if truncated.min() >= 0 and k < K:
            break
    stopped = truncated >= 0
    for r in np.flatnonzero(stopped):
        # counts after truncation are meaningless
        Zk[r, truncated[r] + 1 :] = -1
        ZkF[r, truncated[r] + 1 :] = -1
    return TreeBatch(Zk, ZkF, truncated)


def simulate_tree(
    law: DegreeDistribution,
    mode: Mode,
    model: JointModel,
    K: int,
    d: float,
    rng: np.random.Generator,
    cap: int = DEFAULT_CAP,
) -> TreeCompetitionResult:
    """One tree to generation ``K``.  Raises :class:`CapExceeded` on overflow."""
    b = simulate_tree_batch(law, mode, model, K, d, 1, rng, cap)
    t = int(b.truncated[0])
    res = TreeCompetitionResult(mode, K, d, b.Zk[0], b.ZkF[0], None if t < 0 else t)
    if res.truncated:
        raise CapExceeded(res)
    return res


def tree_ratio_stats(batch: TreeBatch, condition_on_survival: bool = True):
    """Mean and standard error of ``Z^F_k`` and ``Z^F_k / Z_k`` per generation.

    Truncated replications are excluded; with ``condition_on_survival`` runs
    with ``Z_K = 0`` are discarded too.  Returns a dict of arrays plus the
    number of rejected runs.
    """
    ok = batch.truncated < 0
    if condition_on_survival:
        ok &= batch.Zk[:, -1] > 0
    if not ok.any():
        nan = np.full(batch.Zk.shape[1], np.nan)
        return {
            "mean_zf": nan, "se_zf": nan, "mean_z": nan, "mean_ratio": nan, "se_ratio": nan, "used": 0,
            "rejected": int((batch.truncated < 0).sum()), "truncated": int((batch.truncated >= 0).sum()),
        }
    Zk, ZkF = batch.Zk[ok].astype(float), batch.ZkF[ok].astype(float)
    r = int(ok.sum())
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(Zk > 0, ZkF / np.maximum(Zk, 1.0), 0.0)
    sd = lambda x: x.std(axis=0, ddof=1) / math.sqrt(r) if r > 1 else np.full(x.shape[1], np.nan)
    return {
        "mean_zf": ZkF.mean(axis=0),
        "se_zf": sd(ZkF),
        "mean_z": Zk.mean(axis=0),
        "mean_ratio": ratio.mean(axis=0),
        "se_ratio": sd(ratio),
        "used": int(ok.sum()),
        "rejected": int((batch.truncated < 0).sum() - ok.sum()),
        "truncated": int((batch.truncated >= 0).sum()),
    }


def estimate_tau_tail(
    model: JointModel, d: float, k_max: int, reps: int, rng: np.random.Generator
) -> list[TauTailEstimate]:
    """Monte Carlo ``P(tau_d > k)`` for ``k = 0..k_max`` from ``reps`` walks."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    s = np.zeros(reps)
    alive = np.ones(reps, dtype=bool)
    out = [TauTailEstimate(0, d, 1.0, 0.0, reps)]
    for k in range(1, k_max + 1):
        lf, lr = sample_pairs(model, rng, reps)
        s += lr - lf
        alive &= s > -d
        p = float(alive.mean())
        out.append(TauTailEstimate(k, d, p, math.sqrt(p * (1 - p) / reps), reps))
    return out


def decay_rate(estimates: list[TauTailEstimate], k_min: int = 1) -> float:
    """Log-slope of ``pHat(k)``; targets ``log rho`` in the light-tailed case.

    Fits ``log p + 1.5 log k`` against ``k`` to strip the polynomial factor.
    """
    pts = [(e.k, e.p_hat) for e in estimates if e.k >= k_min and e.p_hat > 0]
    if len(pts) < 2:
        return math.nan
    k = np.array([p[0] for p in pts], dtype=float)
    y = np.log([p[1] for p in pts]) + 1.5 * np.log(k)
    return float(np.polyfit(k, y, 1)[0])
