"""Long-run cost under iid random refresh intervals.

With refresh intervals Y ~ H drawn independently of the update process, the
long-run cost per unit time is

    C_H = C_r / E[Y] + lam * int_0^inf C_a(t) * (1 - H(t)) dt / E[Y].

The age integral equals E[I(Y)] where I is the antiderivative of C_a, which
gives closed forms through moments (power costs) or the moment generating
function (exponential costs). Table costs fall back to quadrature.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Any, ClassVar, NamedTuple

import numpy as np
from scipy import special

from .cost_model import (
    AgeCostSpec,
    CostReport,
    Exponential,
    Linear,
    Power,
    Scenario,
    Sum,
    Table,
    long_run_cost,
)
from .errors import DomainError, InfiniteCostError, SchemaError
from .numerics import QuadConfig, integrate

__all__ = [
    "IntervalDistribution",
    "Degenerate",
    "Uniform",
    "ExponentialInterval",
    "GammaInterval",
    "distribution_from_dict",
    "mean",
    "survival",
    "random_schedule_cost",
    "compare_random_vs_fixed",
    "RandomVsFixed",
    "TAIL_PROBABILITY",
]

# Survival level at which the infinite integral is truncated.
TAIL_PROBABILITY = 1e-15


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
    return value


class IntervalDistribution(abc.ABC):
    """Distribution of refresh intervals on (0, inf) with finite mean."""

    kind: ClassVar[str]

    @abc.abstractmethod
    def mean(self) -> float: ...

    @abc.abstractmethod
    def survival(self, t: float) -> float:
        """P(Y > t)."""

    @abc.abstractmethod
    def support(self) -> tuple[float, float]:
        """(lower, upper) where upper is the truncation point for infinite tails."""

    @abc.abstractmethod
    def moment(self, m: float) -> float:
        """E[Y**m] for real m > 0."""

    @abc.abstractmethod
    def mgf(self, s: float) -> float:
        """E[exp(s * Y)]; math.inf where it diverges."""

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    @abc.abstractmethod
    def to_dict(self) -> dict[str, Any]: ...

    @property
    def degenerate(self) -> bool:
        return False

    def cdf(self, t: float) -> float:
        return 1.0 - self.survival(t)


@dataclass(frozen=True)
class Degenerate(IntervalDistribution):
    """Fixed interval: P(Y = t) = 1."""

    t: float
    kind: ClassVar[str] = "degenerate"

    def __post_init__(self):
        object.__setattr__(self, "t", _positive("t", self.t))

    @property
    def degenerate(self):
        return True

    def mean(self):
        return self.t

    def survival(self, t):
        return 1.0 if t < self.t else 0.0

    def cdf(self, t):
        return 0.0 if t < self.t else 1.0

    def support(self):
        return self.t, self.t

    def moment(self, m):
        return self.t**m

    def mgf(self, s):
        return math.exp(s * self.t)

    def sample(self, rng, n):
        return np.full(n, self.t)

    def to_dict(self):
        return {"kind": self.kind, "t": self.t}


@dataclass(frozen=True)
class Uniform(IntervalDistribution):
    """Uniform on (a, b) with 0 < a < b."""

    a: float
    b: float
    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b) and 0.0 < a < b):
            raise DomainError(f"uniform bounds need 0 < a < b, got ({a}, {b})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def around(cls, center: float, half_width: float) -> Uniform:
        """Uniform on (center - half_width, center + half_width)."""
        return cls(center - half_width, center + half_width)

    def mean(self):
        return 0.5 * (self.a + self.b)

    def survival(self, t):
        if t <= self.a:
            return 1.0
        if t >= self.b:
            return 0.0
        return (self.b - t) / (self.b - self.a)

    def cdf(self, t):
        if t <= self.a:
            return 0.0
        if t >= self.b:
            return 1.0
        return (t - self.a) / (self.b - self.a)

    def support(self):
        return self.a, self.b

    def moment(self, m):
        return (self.b ** (m + 1) - self.a ** (m + 1)) / ((m + 1) * (self.b - self.a))

    def mgf(self, s):
        w = self.b - self.a
        if s == 0.0:
            return 1.0
        return math.exp(s * self.a) * math.expm1(s * w) / (s * w)

    def sample(self, rng, n):
        return rng.uniform(self.a, self.b, n)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class ExponentialInterval(IntervalDistribution):
    """Exponential intervals with the given mean."""

    mean_: float
    kind: ClassVar[str] = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "mean_", _positive("mean", self.mean_))

    def mean(self):
        return self.mean_

    def survival(self, t):
        return math.exp(-max(t, 0.0) / self.mean_)

    def cdf(self, t):
        return -math.expm1(-max(t, 0.0) / self.mean_)

    def support(self):
        return 0.0, -self.mean_ * math.log(TAIL_PROBABILITY)

    def moment(self, m):
        return math.exp(math.lgamma(m + 1.0) + m * math.log(self.mean_))

    def mgf(self, s):
        if s * self.mean_ >= 1.0:
            return math.inf
        return 1.0 / (1.0 - s * self.mean_)

    def sample(self, rng, n):
        return rng.exponential(self.mean_, n)

    def to_dict(self):
        return {"kind": self.kind, "mean": self.mean_}


@dataclass(frozen=True)
class GammaInterval(IntervalDistribution):
    """Gamma intervals with shape k and scale theta."""

    shape: float
    scale: float
    kind: ClassVar[str] = "gamma"

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive("shape", self.shape))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    def mean(self):
        return self.shape * self.scale

    def survival(self, t):
        return float(special.gammaincc(self.shape, max(t, 0.0) / self.scale))

    def cdf(self, t):
        return float(special.gammainc(self.shape, max(t, 0.0) / self.scale))

    def support(self):
        return 0.0, float(special.gammainccinv(self.shape, TAIL_PROBABILITY)) * self.scale

    def moment(self, m):
        k = self.shape
        return math.exp(math.lgamma(k + m) - math.lgamma(k) + m * math.log(self.scale))

    def mgf(self, s):
        if s * self.scale >= 1.0:
            return math.inf
        return (1.0 - s * self.scale) ** (-self.shape)

    def sample(self, rng, n):
        return rng.gamma(self.shape, self.scale, n)

    def to_dict(self):
        return {"kind": self.kind, "shape": self.shape, "scale": self.scale}


def distribution_from_dict(doc: Any) -> IntervalDistribution:
    """Build an interval distribution from its JSON object form."""
    if not isinstance(doc, dict):
        raise SchemaError("distribution must be an object")
    fields = {
        "degenerate": (Degenerate, ("t",)),
        "uniform": (Uniform, ("a", "b")),
        "exponential": (ExponentialInterval, ("mean",)),
        "gamma": (GammaInterval, ("shape", "scale")),
    }
    kind = doc.get("kind")
    if kind not in fields:
        raise SchemaError(f"unknown distribution kind {kind!r}; expected one of {sorted(fields)}")
    cls, names = fields[kind]
    for name in names:
        v = doc.get(name)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise SchemaError(f"{kind} distribution needs numeric field {name!r}")
    return cls(*(doc[name] for name in names))


def mean(d: IntervalDistribution) -> float:
    return d.mean()


def survival(d: IntervalDistribution, t: float) -> float:
    """P(Y > t) for t >= 0."""
    t = float(t)
    if not t >= 0.0:
        raise DomainError(f"t must be >= 0, got {t!r}")
    return d.survival(t)


def _split_points(spec: AgeCostSpec, lo: float, hi: float) -> list[float]:
    # Table kinks inside (lo, hi) become panel boundaries for the quadrature.
    kinks: set[float] = set()
    leaves = spec.flatten() if isinstance(spec, Sum) else [(1.0, spec)]
    for _, leaf in leaves:
        if isinstance(leaf, Table):
            kinks.update(t for t in leaf.breakpoints if lo < t < hi)
    return [lo, *sorted(kinks), hi]


def _piecewise_integral(
    f, spec: AgeCostSpec, lo: float, hi: float, cfg: QuadConfig, extra: tuple[float, ...] = ()
) -> float:
    pts = sorted(set(_split_points(spec, lo, hi)).union(x for x in extra if lo < x < hi))
    return math.fsum(integrate(f, a, b, cfg) for a, b in zip(pts, pts[1:]))


def _gamma_params(d: IntervalDistribution) -> tuple[float, float]:
    if isinstance(d, ExponentialInterval):
        return 1.0, d.mean_
    return d.shape, d.scale


def _partial_moment(d: IntervalDistribution, m: float, h: float) -> float:
    """E[Y**m; Y > h] for exponential or gamma intervals."""
    k, theta = _gamma_params(d)
    log_norm = math.lgamma(k + m) - math.lgamma(k) + m * math.log(theta)
    return math.exp(log_norm) * float(special.gammaincc(k + m, h / theta))


def _partial_mgf(d: IntervalDistribution, s: float, h: float) -> float:
    """E[exp(s Y); Y > h] for s below the tail decay rate.

    Tilting a gamma density by exp(s t) gives another gamma with scale
    theta / (1 - s theta).
    """
    k, theta = _gamma_params(d)
    tilt = 1.0 - s * theta
    return tilt ** (-k) * float(special.gammaincc(k, h * tilt / theta))


def _tail_integral(spec: AgeCostSpec, d: IntervalDistribution, h: float) -> float:
    """int_h^inf C_a(t) P(Y > t) dt in closed form, for h past every Table kink.

    Uses int_h^inf g'(t) P(Y > t) dt = E[g(Y) - g(h); Y > h].
    """
    sf = d.survival(h)
    excess = _partial_moment(d, 1.0, h) - h * sf
    if isinstance(spec, Linear):
        return spec.slope * (_partial_moment(d, 2.0, h) - h * h * sf) / 2.0
    if isinstance(spec, Power):
        q = spec.exp + 1.0
        return spec.coeff * (_partial_moment(d, q, h) - h**q * sf) / q
    if isinstance(spec, Exponential):
        a, b = spec.scale, spec.rate
        return a * ((_partial_mgf(d, b, h) - math.exp(b * h) * sf) / b - excess)
    if isinstance(spec, Sum):
        return math.fsum(w * _tail_integral(t, d, h) for w, t in spec.terms)
    # Table beyond its last point: c_n + slope * (t - t_n).
    (t0, c0), (t1, c1) = spec.points[-2], spec.points[-1]
    slope = (c1 - c0) / (t1 - t0)
    return (c1 - slope * t1) * excess + slope * (_partial_moment(d, 2.0, h) - h * h * sf) / 2.0


def _last_kink(spec: AgeCostSpec) -> float:
    leaves = spec.flatten() if isinstance(spec, Sum) else [(1.0, spec)]
    return max((leaf.breakpoints[-1] for _, leaf in leaves if isinstance(leaf, Table)), default=0.0)


def _survival_weighted_integral(
    spec: AgeCostSpec, d: IntervalDistribution, lo: float, offset: float, cfg: QuadConfig
) -> float:
    """int_lo^inf (C_a(t) - offset) P(Y > t) dt.

    Quadrature covers lo up to where P(Y > t) falls below TAIL_PROBABILITY.
    Past that point a fast-growing cost can still carry weight, so the rest
    of an unbounded tail is added in closed form.
    """
    hi = d.support()[1]
    bounded = isinstance(d, (Degenerate, Uniform))
    if not bounded:
        hi = max(hi, _last_kink(spec), lo)
    body = 0.0
    if hi > lo:
        # Panels doubling in width from lo, in units of the decay scale, so
        # a long range with a thin bump at the left end is not undersampled.
        panels: tuple[float, ...] = ()
        if not bounded:
            scale = _gamma_params(d)[1]
            n = max(0, math.ceil(math.log2((hi - lo) / scale)) + 1)
            panels = tuple(lo + scale * 2.0**j for j in range(n))
        body = _piecewise_integral(
            lambda t: (spec.value(t) - offset) * d.survival(t), spec, lo, hi, cfg, panels
        )
    if bounded:
        return body
    excess = _partial_moment(d, 1.0, hi) - hi * d.survival(hi)
    return body + _tail_integral(spec, d, hi) - offset * excess


def _check_convergence(spec: AgeCostSpec, d: IntervalDistribution) -> None:
    leaves = spec.flatten() if isinstance(spec, Sum) else [(1.0, spec)]
    for w, leaf in leaves:
        if w > 0.0 and isinstance(leaf, Exponential) and math.isinf(d.mgf(leaf.rate)):
            raise InfiniteCostError(
                f"infinite expected cost: exponential age cost with rate {leaf.rate} grows "
                f"faster than the {d.kind} interval tail decays"
            )


def _expected_antiderivative(
    spec: AgeCostSpec, d: IntervalDistribution, cfg: QuadConfig
) -> float:
    """E[int_0^Y C_a(t) dt] = int_0^inf C_a(t) P(Y > t) dt."""
    if isinstance(d, Degenerate):
        return spec.integral(d.t)
    if isinstance(spec, Linear):
        return 0.5 * spec.slope * d.moment(2.0)
    if isinstance(spec, Power):
        return spec.coeff * d.moment(spec.exp + 1.0) / (spec.exp + 1.0)
    if isinstance(spec, Exponential):
        a, b = spec.scale, spec.rate
        return a * ((d.mgf(b) - 1.0) / b - d.mean())
    if isinstance(spec, Sum):
        return math.fsum(w * _expected_antiderivative(s, d, cfg) for w, s in spec.terms)
    lo = d.support()[0]
    head = spec.integral(lo)
    tail = _survival_weighted_integral(spec, d, lo, 0.0, cfg)
    return head + tail


def random_schedule_cost(
    scn: Scenario, d: IntervalDistribution, cfg: QuadConfig = QuadConfig()
) -> CostReport:
    """Long-run cost per unit time with iid random refresh intervals.

    ``interval`` on the returned report is the mean refresh interval.

    Raises:
        InfiniteCostError: the age integral diverges (an exponential age cost
            whose rate reaches the tail decay rate of the intervals).
    """
    _check_convergence(scn.age_cost, d)
    mu = d.mean()
    age_integral = _expected_antiderivative(scn.age_cost, d, cfg) if scn.lam > 0.0 else 0.0
    if not math.isfinite(age_integral):
        raise InfiniteCostError("infinite expected cost")
    return CostReport.from_parts(scn.refresh_cost / mu, scn.lam * age_integral / mu, mu)


def jensen_gap(scn: Scenario, d: IntervalDistribution, cfg: QuadConfig = QuadConfig()) -> float:
    """C_H - C(E[Y]) as a sum of two nonnegative integrals.

    Writing mu = E[Y], the gap is

        lam/mu * ( int_mu^inf (C_a(t) - C_a(mu)) P(Y > t) dt
                 + int_0^mu  (C_a(mu) - C_a(t)) P(Y <= t) dt ),

    which avoids subtracting two nearly equal costs when Y is concentrated.
    """
    _check_convergence(scn.age_cost, d)
    if d.degenerate or scn.lam == 0.0:
        return 0.0
    mu = d.mean()
    spec = scn.age_cost
    c_mu = spec.value(mu)
    lo = d.support()[0]
    upper = _survival_weighted_integral(spec, d, mu, c_mu, cfg)
    lower = 0.0
    if lo < mu:
        lower = _piecewise_integral(lambda t: (c_mu - spec.value(t)) * d.cdf(t), spec, lo, mu, cfg)
    return scn.lam * (upper + lower) / mu


class RandomVsFixed(NamedTuple):
    c_h: CostReport
    c_fixed: CostReport
    gap: float


def compare_random_vs_fixed(
    scn: Scenario, d: IntervalDistribution, cfg: QuadConfig = QuadConfig()
) -> RandomVsFixed:
    """Random-interval cost next to the fixed schedule with the same mean."""
    c_h = random_schedule_cost(scn, d, cfg)
    c_fixed = long_run_cost(scn, d.mean())
    return RandomVsFixed(c_h, c_fixed, jensen_gap(scn, d, cfg))
