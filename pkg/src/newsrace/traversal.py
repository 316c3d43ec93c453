"""Traversal-time laws for the fake/correct news pair.

Every edge carries a pair ``(lF, lR)``: the time fake news and correct news
need to cross it.  A :class:`JointModel` bundles the two marginal laws with
one of three couplings.  The transforms ``mgf`` (``E[e^{sL}]``) and ``psi``
(``E[e^{s(L^R - L^F)}]``) feed every survival criterion in
:mod:`newsrace.theory`.

Spec grammar (CLI and config files)::

    exp:<rate>   det:<value>   unif:<lo>:<hi>   pareto:<shape>:<scale>
    independent | comonotone | countermonotone
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

INF = math.inf

# absolute error target handed to scipy.integrate.quad
QUAD_EPSABS = 1e-12


class Coupling(enum.Enum):
    INDEPENDENT = "independent"
    COMONOTONE = "comonotone"
    COUNTERMONOTONE = "countermonotone"


class Marginal:
    """Base class for a non-negative traversal-time law."""

    family: str = ""

    def mean(self) -> float:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def upper_quantile(self, v):
        """``quantile(1 - v)``, accurate for tiny ``v``."""
        return self.quantile(1.0 - np.asarray(v, dtype=float))

    def mgf(self, s: float) -> float:
        raise NotImplementedError

    def mgf_deriv(self, s: float) -> float:
        """``E[L e^{sL}]``, the derivative of :meth:`mgf`."""
        raise NotImplementedError

    def abscissa(self) -> float:
        """Supremum of ``s`` with ``E[e^{sL}] < inf``."""
        raise NotImplementedError

    def atom_at_zero(self) -> float:
        return 0.0

    def upper_tail(self) -> tuple[str, float, float]:
        """Growth class of the quantile function as ``u -> 1``.

        Returns ``(kind, a, b)`` with kind ``"bounded"``, ``"log"`` (quantile
        ~ ``-a log(1-u)``) or ``"power"`` (quantile ~ ``b (1-u)^{-a}``).
        """
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        return self.quantile(rng.random(size))

    def spec(self) -> str:
        raise NotImplementedError

    def scaled(self, c: float) -> "Marginal":
        """Law of ``c * L``."""
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(Marginal):
    rate: float
    family = "exp"

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"Exponential rate must be positive, got {self.rate}")

    def mean(self):
        return 1.0 / self.rate

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def quantile(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def upper_quantile(self, v):
        return -np.log(np.asarray(v, dtype=float)) / self.rate

    def mgf(self, s):
        if s >= self.rate:
            return INF
        return self.rate / (self.rate - s)

    def mgf_deriv(self, s):
        if s >= self.rate:
            return INF
        return self.rate / (self.rate - s) ** 2

    def abscissa(self):
        return self.rate

    def upper_tail(self):
        return ("log", 1.0 / self.rate, 0.0)

    def spec(self):
        return f"exp:{self.rate!r}"

    def scaled(self, c):
        return Exponential(self.rate / c)


@dataclass(frozen=True)
class Deterministic(Marginal):
    value: float
    family = "det"

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise ValueError(f"Deterministic value must be >= 0, got {self.value}")

    def mean(self):
        return float(self.value)

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.value, 1.0, 0.0)

    def quantile(self, u):
        return np.full(np.shape(u), float(self.value))

    def mgf(self, s):
        return math.exp(s * self.value) if s * self.value < 709.0 else INF

    def mgf_deriv(self, s):
        return self.value * self.mgf(s)

    def abscissa(self):
        return INF

    def atom_at_zero(self):
        return 1.0 if self.value == 0 else 0.0

    def upper_tail(self):
        return ("bounded", 0.0, 0.0)

    def spec(self):
        return f"det:{self.value!r}"

    def scaled(self, c):
        return Deterministic(self.value * c)


@dataclass(frozen=True)
class Uniform(Marginal):
    lo: float
    hi: float
    family = "unif"

    def __post_init__(self):
        if not (0 <= self.lo < self.hi and math.isfinite(self.hi)):
            raise ValueError(f"Uniform needs 0 <= lo < hi, got ({self.lo}, {self.hi})")

    def mean(self):
        return 0.5 * (self.lo + self.hi)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def quantile(self, u):
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)

    def mgf(self, s):
        a, b = self.lo, self.hi
        if s == 0:
            return 1.0
        if s * b > 709.0:
            return INF
        # (e^{sb} - e^{sa}) / (s (b-a)) written to avoid cancellation
        return math.exp(s * a) * math.expm1(s * (b - a)) / (s * (b - a))

    def mgf_deriv(self, s):
        a, b = self.lo, self.hi
        w = b - a
        if abs(s * w) < 1e-4:
            # series in s around 0 of E[L e^{sL}]
            m1 = 0.5 * (a + b)
            m2 = (a * a + a * b + b * b) / 3.0
            m3 = (a + b) * (a * a + b * b) / 4.0
            return m1 + s * m2 + 0.5 * s * s * m3
        if s * b > 709.0:
            return INF
        num = (b * math.exp(s * b) - a * math.exp(s * a)) * s - (math.exp(s * b) - math.exp(s * a))
        return num / (s * s * w)

    def abscissa(self):
        return INF

    def upper_tail(self):
        return ("bounded", 0.0, 0.0)

    def spec(self):
        return f"unif:{self.lo!r}:{self.hi!r}"

    def scaled(self, c):
        return Uniform(self.lo * c, self.hi * c)


@dataclass(frozen=True)
class Pareto(Marginal):
    """Pareto law with ``P(L > x) = (scale / x)^shape`` for ``x >= scale``."""

    shape: float
    scale: float
    family = "pareto"

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError(f"Pareto needs shape > 0 and scale > 0, got ({self.shape}, {self.scale})")

    def mean(self):
        if self.shape <= 1:
            return INF
        return self.shape * self.scale / (self.shape - 1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.maximum(x, self.scale)
        return np.where(x >= self.scale, 1.0 - (self.scale / safe) ** self.shape, 0.0)

    def quantile(self, u):
        return self.scale * (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / self.shape)

    def upper_quantile(self, v):
        return self.scale * np.asarray(v, dtype=float) ** (-1.0 / self.shape)

    def _integral(self, s, power):
        # E[L^power e^{sL}] for s < 0, substituting u = scale / L in (0, 1]
        a, xm = self.shape, self.scale

        def f(u):
            if u == 0.0:
                return 0.0
            return a * u ** (a - 1 - power) * math.exp(s * xm / u)

        val, _ = integrate.quad(f, 0.0, 1.0, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
        return xm**power * val

    def mgf(self, s):
        if s > 0:
            return INF
        if s == 0:
            return 1.0
        return self._integral(s, 0)

    def mgf_deriv(self, s):
        if s > 0:
            return INF
        if s == 0:
            return self.mean()
        return self._integral(s, 1)

    def abscissa(self):
        return 0.0

    def upper_tail(self):
        return ("power", 1.0 / self.shape, self.scale)

    def spec(self):
        return f"pareto:{self.shape!r}:{self.scale!r}"

    def scaled(self, c):
        return Pareto(self.shape, self.scale * c)


def parse_marginal(text: str) -> Marginal:
    """Parse ``exp:1``, ``det:2``, ``unif:0:1`` or ``pareto:2.5:1``."""
    parts = text.strip().split(":")
    head, args = parts[0].lower(), parts[1:]
    try:
        vals = [float(a) for a in args]
    except ValueError:
        raise ValueError(f"bad numeric argument in distribution spec {text!r}") from None
    arity = {"exp": 1, "det": 1, "unif": 2, "pareto": 2}
    if head not in arity:
        raise ValueError(f"unknown distribution family in {text!r}")
    if len(vals) != arity[head]:
        raise ValueError(f"{head} takes {arity[head]} argument(s), got {text!r}")
    if head == "exp":
        return Exponential(vals[0])
    if head == "det":
        return Deterministic(vals[0])
    if head == "unif":
        return Uniform(vals[0], vals[1])
    return Pareto(vals[0], vals[1])


def parse_coupling(text: str) -> Coupling:
    try:
        return Coupling(text.strip().lower())
    except ValueError:
        raise ValueError(f"unknown coupling {text!r}") from None


def _pair_limit(a: Marginal, b: Marginal) -> float:
    """sup{s >= 0 : E[exp(s (Qa(U) - Qb(U)))] < inf} for a shared uniform U.

    Decided from the growth class of both quantile functions at ``u -> 1``;
    near ``u -> 0`` every quantile is bounded.
    """
    ka, ca, xa = a.upper_tail()
    kb, cb, xb = b.upper_tail()
    if ka == "bounded":
        return INF
    if ka == "log":
        if kb == "bounded":
            return 1.0 / ca
        if kb == "log":
            c = ca - cb
            return INF if c <= 0 else 1.0 / c
        return INF  # power growth of Qb dominates
    # ka == "power"
    if kb in ("bounded", "log"):
        return 0.0
    if ca > cb:
        return 0.0
    if ca < cb:
        return INF
    return 0.0 if xa > xb else INF


@dataclass(frozen=True)
class JointModel:
    """Law of the per-edge pair ``(L^F, L^R)``."""

    fake: Marginal
    correct: Marginal
    coupling: Coupling = Coupling.INDEPENDENT

    def __post_init__(self):
        ok, reason = check_feasibility(self)
        if not ok:
            raise ValueError(f"infeasible traversal model: {reason}")

    @classmethod
    def unchecked(cls, fake: Marginal, correct: Marginal, coupling: Coupling = Coupling.INDEPENDENT) -> "JointModel":
        """Skip the feasibility check; for evaluating transforms of degenerate pairs."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "fake", fake)
        object.__setattr__(obj, "correct", correct)
        object.__setattr__(obj, "coupling", coupling)
        return obj

    def spec(self) -> dict:
        return {"dist_f": self.fake.spec(), "dist_r": self.correct.spec(), "coupling": self.coupling.value}

    def scaled(self, c: float) -> "JointModel":
        return JointModel(self.fake.scaled(c), self.correct.scaled(c), self.coupling)

    @property
    def shares_driver(self) -> bool:
        """True when the coupling matters for mixed expectations."""
        if self.coupling is Coupling.INDEPENDENT:
            return False
        return not (isinstance(self.fake, Deterministic) or isinstance(self.correct, Deterministic))

    def psi_domain(self) -> tuple[float, float]:
        """Open interval ``(s_lo, s_hi)`` on which ``psi`` is finite."""
        f, r = self.fake, self.correct
        if self.coupling is Coupling.COMONOTONE and self.shares_driver:
            return -_pair_limit(f, r), _pair_limit(r, f)
        # independent and countermonotone: each side only sees its own tail
        return -f.abscissa(), r.abscissa()


def make_model(dist_f: str, dist_r: str, coupling: str = "independent") -> JointModel:
    return JointModel(parse_marginal(dist_f), parse_marginal(dist_r), parse_coupling(coupling))


def check_feasibility(model) -> tuple[bool, str]:
    """Decide ``P(L^F < L^R) > 0`` analytically."""
    f, r, cpl = model.fake, model.correct, model.coupling
    det_f, det_r = isinstance(f, Deterministic), isinstance(r, Deterministic)
    if det_f and det_r:
        if f.value < r.value:
            return True, "L^F < L^R a.s."
        if f.value == r.value:
            return False, "L^F = L^R a.s."
        return False, "L^F > L^R a.s."

    def support(m):
        if isinstance(m, Deterministic):
            return m.value, m.value
        if isinstance(m, Uniform):
            return m.lo, m.hi
        if isinstance(m, Pareto):
            return m.scale, INF
        return 0.0, INF

    f_lo, f_hi = support(f)
    r_lo, r_hi = support(r)
    if cpl is Coupling.INDEPENDENT or det_f or det_r:
        # closed supports; continuous parts make boundary events null
        if f_lo < r_hi:
            return True, "supports overlap with L^F below L^R"
        return False, "L^F >= L^R a.s."
    if cpl is Coupling.COUNTERMONOTONE:
        # u -> 0 pairs the bottom of L^F with the top of L^R
        if f_lo < r_hi:
            return True, "lower end of L^F lies below upper end of L^R"
        return False, "L^F >= L^R a.s."
    if f == r:
        return False, "L^F = L^R a.s."
    if r_lo > f_lo:
        return True, "lower endpoint of L^R exceeds that of L^F"
    rank = {"bounded": 0, "log": 1, "power": 2}
    kf, cf, xf = f.upper_tail()
    kr, cr, xr = r.upper_tail()
    if (rank[kr], cr, xr) > (rank[kf], cf, xf) and kr != "bounded":
        return True, "upper tail of L^R dominates that of L^F"
    # remaining cases: compare quantile functions on (0, 1)
    g = np.linspace(1e-9, 1 - 1e-9, 20001)
    qf = f.quantile(g)
    qr = r.quantile(g)
    if np.any(qf < qr):
        return True, "quantile of L^R exceeds that of L^F on a set of positive measure"
    if np.all(qf == qr):
        return False, "L^F = L^R a.s."
    return False, "L^F >= L^R a.s."


def sample_pairs(model: JointModel, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` i.i.d. pairs ``(lF, lR)`` by inverse-CDF sampling."""
    u = rng.random(size)
    if model.coupling is Coupling.INDEPENDENT:
        v = rng.random(size)
    elif model.coupling is Coupling.COMONOTONE:
        v = u
    else:
        v = 1.0 - u
    return np.asarray(model.fake.quantile(u), dtype=float), np.asarray(model.correct.quantile(v), dtype=float)


def sample_pair(model: JointModel, rng: np.random.Generator) -> tuple[float, float]:
    lf, lr = sample_pairs(model, rng, 1)
    return float(lf[0]), float(lr[0])


def mgf(m: Marginal, s: float) -> float:
    return m.mgf(s)


def mean(m: Marginal) -> float:
    return m.mean()


def _coupled_expectation(model: JointModel, g) -> float:
    """``E[g(lF, lR)]`` under a shared-driver coupling, by quadrature over u."""
    f, r = model.fake, model.correct
    counter = model.coupling is Coupling.COUNTERMONOTONE

    # u = e^{-t} near 0 and 1 - u = e^{-t} near 1 turn power-law endpoint
    # singularities into exponentially decaying tails
    def lower(t):
        w = math.exp(-t)
        if w == 0.0:
            return 0.0
        lr = r.upper_quantile(w) if counter else r.quantile(w)
        return g(float(f.quantile(w)), float(lr)) * w

    def upper(t):
        w = math.exp(-t)
        if w == 0.0:
            return 0.0
        lr = r.quantile(w) if counter else r.upper_quantile(w)
        return g(float(f.upper_quantile(w)), float(lr)) * w

    ln2 = math.log(2.0)
    a, _ = integrate.quad(lower, ln2, math.inf, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=400)
    b, _ = integrate.quad(upper, ln2, math.inf, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=400)
    return a + b


def psi(model: JointModel, s: float) -> float:
    """``E[exp(s (L^R - L^F))]``, or ``inf`` outside the convergence domain."""
    if s == 0:
        return 1.0
    lo, hi = model.psi_domain()
    if s >= hi or s <= lo:
        return INF
    if not model.shares_driver:
        return model.correct.mgf(s) * model.fake.mgf(-s)

    def g(lf, lr):
        x = s * (lr - lf)
        return math.exp(x) if x < 709.0 else INF

    return _coupled_expectation(model, g)


def psi_deriv(model: JointModel, s: float) -> float:
    """``E[(L^R - L^F) exp(s (L^R - L^F))]`` inside the domain."""
    lo, hi = model.psi_domain()
    if s >= hi or s <= lo:
        return INF
    if not model.shares_driver:
        f, r = model.fake, model.correct
        return r.mgf_deriv(s) * f.mgf(-s) - r.mgf(s) * f.mgf_deriv(-s)
    return _coupled_expectation(model, lambda lf, lr: (lr - lf) * math.exp(s * (lr - lf)))


def mixed_moment(model: JointModel, lam: float) -> float:
    """``E[L^R exp(-lam L^F)]``."""
    if not model.shares_driver:
        return model.correct.mean() * model.fake.mgf(-lam)
    return _coupled_expectation(model, lambda lf, lr: lr * math.exp(-lam * lf))
