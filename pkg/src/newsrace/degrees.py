"""Degree sequences, limiting degree laws and the forward branching mean nu.

Degree grammar::

    regular:<r>:<n>
    iid:<pk-spec>:<n>            pk-spec like ``2=0.5,4=0.5``
    pareto-degree:<tau>:<min>:<n>
    file:<path>                  one integer per line

The ``:<n>`` suffix may be dropped when the caller supplies ``n`` (sweeps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

INF = math.inf


class ZeroDegree(ValueError):
    """A degree entry is below 1."""


@dataclass(frozen=True)
class DegreeSequence:
    d: np.ndarray = field(repr=False)
    fix_applied: bool = False

    @property
    def n(self) -> int:
        return int(self.d.size)

    @property
    def total(self) -> int:
        return int(self.d.sum())


def normalize_sequence(raw) -> DegreeSequence:
    """Validate a raw degree list and make the total even.

    An odd total is fixed by adding one to the last entry.
    """
    d = np.array(raw, dtype=np.int64).ravel()
    if d.size == 0:
        raise ValueError("degree sequence is empty")
    if np.any(d < 1):
        bad = int(np.flatnonzero(d < 1)[0])
        raise ZeroDegree(f"entry {bad} has degree {int(d[bad])}; remove isolated vertices first")
    fix = bool(d.sum() % 2)
    if fix:
        d[-1] += 1
    d.setflags(write=False)
    return DegreeSequence(d, fix)


class DegreeDistribution:
    """Limiting degree law ``D`` with ``P(D >= 1) = 1``."""

    m1: float
    m2: float

    @property
    def nu(self) -> float:
        if math.isinf(self.m2):
            return INF
        return (self.m2 - self.m1) / self.m1

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    def sample_forward(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draws of ``D* - 1``, the size-biased law minus one."""
        raise NotImplementedError

    def d2logd_finite(self) -> bool:
        raise NotImplementedError

    def min_degree(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteDegreeLaw(DegreeDistribution):
    """Degree law with finite support given as ``{k: p_k}``."""

    ks: tuple
    ps: tuple

    def __post_init__(self):
        ks = np.asarray(self.ks, dtype=np.int64)
        ps = np.asarray(self.ps, dtype=float)
        if ks.size == 0 or ks.size != ps.size:
            raise ValueError("degree law needs matching, non-empty k and p lists")
        # k = 0 is allowed: trees may go extinct; graph sequences reject it later
        if np.any(ks < 0):
            raise ValueError("degree law puts mass on negative k")
        if np.any(ps < 0) or abs(ps.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities must be >= 0 and sum to 1, got sum {ps.sum()!r}")
        if float(np.dot(ks, ps)) <= 0:
            raise ValueError("degree law has zero mean")
        if len(set(ks.tolist())) != ks.size:
            raise ValueError("repeated degree value in law")

    @classmethod
    def from_dict(cls, pk: dict) -> "FiniteDegreeLaw":
        items = sorted((int(k), float(p)) for k, p in pk.items())
        return cls(tuple(k for k, _ in items), tuple(p for _, p in items))

    @classmethod
    def regular(cls, r: int) -> "FiniteDegreeLaw":
        return cls((int(r),), (1.0,))

    @property
    def _k(self):
        return np.asarray(self.ks, dtype=np.int64)

    @property
    def _p(self):
        return np.asarray(self.ps, dtype=float)

    @property
    def m1(self):
        return float(np.dot(self._k, self._p))

    @property
    def m2(self):
        return float(np.dot(self._k.astype(float) ** 2, self._p))

    def forward_law(self) -> tuple[np.ndarray, np.ndarray]:
        """Support and probabilities of ``D* - 1``: ``(k+1) p_{k+1} / E[D]``."""
        keep = self._k > 0
        return self._k[keep] - 1, (self._k * self._p / self.m1)[keep]

    def sample(self, rng, size):
        return rng.choice(self._k, size=size, p=self._p)

    def sample_forward(self, rng, size):
        k, p = self.forward_law()
        return rng.choice(k, size=size, p=p)

    def d2logd_finite(self):
        return True

    def min_degree(self):
        return int(self._k[self._p > 0].min())

    def spec(self) -> str:
        return ",".join(f"{k}={p!r}" for k, p in zip(self.ks, self.ps))


@dataclass(frozen=True)
class ParetoDegreeLaw(DegreeDistribution):
    """Integer Pareto law ``P(D >= k) = (kmin / k)^(tau - 1)`` for ``k >= kmin``.

    Realized as ``floor(kmin * U^{-1/(tau-1)})``, so ``P(D > k) ~ c k^{1-tau}``.
    """

    tau: float
    kmin: int = 2

    def __post_init__(self):
        if not self.tau > 2:
            raise ValueError(f"Pareto degree exponent must exceed 2 for a finite mean, got {self.tau}")
        if self.kmin < 1:
            raise ZeroDegree("Pareto degree minimum must be >= 1")

    @property
    def _a(self):
        return self.tau - 1.0

    def tail_ge(self, k):
        """``P(D >= k)``."""
        k = np.asarray(k, dtype=float)
        return np.where(k <= self.kmin, 1.0, (self.kmin / np.maximum(k, 1.0)) ** self._a)

    def pmf(self, k):
        return self.tail_ge(k) - self.tail_ge(np.asarray(k) + 1)

    @property
    def m1(self):
        # E[D] = sum_{k>=1} P(D >= k)
        return (self.kmin - 1) + self.kmin**self._a * float(special.zeta(self._a, self.kmin))

    @property
    def m2(self):
        if self.tau <= 3:
            return INF
        # E[D^2] = sum_{k>=1} (2k - 1) P(D >= k)
        c = self.kmin**self._a
        head = float((self.kmin - 1) ** 2)
        return head + c * (2.0 * float(special.zeta(self._a - 1.0, self.kmin)) - float(special.zeta(self._a, self.kmin)))

    def sample(self, rng, size):
        u = 1.0 - rng.random(size)  # in (0, 1]
        return np.floor(self.kmin * u ** (-1.0 / self._a)).astype(np.int64)

    def forward_tail_ge(self, k):
        """``P(D* >= k)`` for integer ``k >= kmin``, via Hurwitz zeta sums."""
        k = np.asarray(k, dtype=float)
        c = self.kmin**self._a
        # sum_{j>=k} j p_j = k P(D >= k) + sum_{j>k} P(D >= j)
        return (k * self.tail_ge(k) + c * special.zeta(self._a, k + 1.0)) / self.m1

    def sample_forward(self, rng, size):
        u = 1.0 - rng.random(size)
        out = np.empty(np.shape(u), dtype=np.int64)
        flat_u, flat_out = u.ravel(), out.reshape(-1)
        for i, ui in enumerate(flat_u):
            # largest k with P(D* >= k) >= ui, found by bracketing + bisection
            lo = self.kmin
            if ui > self.forward_tail_ge(lo + 1):
                flat_out[i] = lo - 1
                continue
            hi = lo + 1
            while self.forward_tail_ge(hi) >= ui:
                lo, hi = hi, 2 * hi
                if hi > 2**62:
                    break
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if self.forward_tail_ge(mid) >= ui:
                    lo = mid
                else:
                    hi = mid
            flat_out[i] = lo - 1
        return out

    def d2logd_finite(self):
        return self.tau > 3

    def min_degree(self):
        return int(self.kmin)


def nu_of(model) -> float:
    """Forward branching mean ``(E[D^2] - E[D]) / E[D]``."""
    if isinstance(model, DegreeSequence):
        d = model.d.astype(float)
        m1 = d.mean()
        return float((np.mean(d * d) - m1) / m1)
    return model.nu


def sample_offspring(model: DegreeDistribution, is_root: bool, rng: np.random.Generator, size=None):
    """Root draws from ``D``; any other vertex from ``D* - 1``."""
    n = 1 if size is None else size
    out = model.sample(rng, n) if is_root else model.sample_forward(rng, n)
    return int(out[0]) if size is None else out


@dataclass(frozen=True)
class RegularityReport:
    mean: float
    second_moment: float
    declared_mean: float
    declared_second_moment: float
    mean_gap: float
    second_moment_gap: float
    second_moment_finite: bool
    d2logd_finite: bool
    min_degree_ok: bool

    @property
    def all_pass(self) -> bool:
        return self.second_moment_finite and self.d2logd_finite and self.min_degree_ok


def regularity_report(seq: DegreeSequence, declared: DegreeDistribution) -> RegularityReport:
    """Compare empirical degree moments with the declared limit law.

    Finiteness flags come from the declared family, never from the sample.
    """
    d = seq.d.astype(float)
    m1, m2 = float(d.mean()), float(np.mean(d * d))
    dm1, dm2 = declared.m1, declared.m2
    return RegularityReport(
        mean=m1,
        second_moment=m2,
        declared_mean=dm1,
        declared_second_moment=dm2,
        mean_gap=abs(m1 - dm1),
        second_moment_gap=abs(m2 - dm2) if math.isfinite(dm2) else INF,
        second_moment_finite=math.isfinite(dm2),
        d2logd_finite=declared.d2logd_finite(),
        min_degree_ok=bool(d.min() >= 2) and declared.min_degree() >= 2,
    )


def parse_pk(text: str) -> FiniteDegreeLaw:
    pk = {}
    for item in text.split(","):
        k, sep, p = item.partition("=")
        if not sep:
            raise ValueError(f"bad pk entry {item!r}; expected k=p")
        pk[int(k)] = pk.get(int(k), 0.0) + float(p)
    return FiniteDegreeLaw.from_dict(pk)


@dataclass(frozen=True)
class DegreeSource:
    """Parsed degree spec: a declared law and how to draw a sequence of size n."""

    kind: str
    law: DegreeDistribution | None
    n: int | None
    fixed: DegreeSequence | None = None

    def sequence(self, rng: np.random.Generator, n: int | None = None) -> DegreeSequence:
        if self.fixed is not None:
            if n is not None and n != self.fixed.n:
                raise ValueError(f"file degree sequence has n={self.fixed.n}, requested {n}")
            return self.fixed
        n = self.n if n is None else n
        if n is None:
            raise ValueError(f"degree spec of kind {self.kind!r} needs a vertex count")
        return normalize_sequence(self.law.sample(rng, n))


def parse_degree_spec(text: str) -> DegreeSource:
    head, _, rest = text.strip().partition(":")
    head = head.lower()
    try:
        if head == "file":
            lines = Path(rest).read_text().split()
            seq = normalize_sequence([int(x) for x in lines])
            return DegreeSource("file", None, seq.n, seq)
        parts = rest.split(":") if rest else []
        if head == "regular":
            r = int(parts[0])
            n = int(parts[1]) if len(parts) > 1 else None
            return DegreeSource("regular", FiniteDegreeLaw.regular(r), n)
        if head == "iid":
            n = int(parts[1]) if len(parts) > 1 else None
            return DegreeSource("iid", parse_pk(parts[0]), n)
        if head == "pareto-degree":
            n = int(parts[2]) if len(parts) > 2 else None
            return DegreeSource("pareto-degree", ParetoDegreeLaw(float(parts[0]), int(parts[1])), n)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad degree spec {text!r}: {exc}") from None
    raise ValueError(f"unknown degree spec {text!r}")
