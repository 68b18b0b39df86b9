"""Age-related cost functions, scenarios, and the long-run average cost.

An age-related cost function maps the age of an unreflected origin update to
a cost. Every variant here is strictly increasing on t > 0 and unbounded, and
carries a closed-form antiderivative so the optimizer never needs quadrature.
"""

from __future__ import annotations

import abc
import bisect
import math
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np

from .errors import DomainError, SchemaError

__all__ = [
    "AgeCostSpec",
    "Linear",
    "Power",
    "Exponential",
    "Table",
    "Sum",
    "Scenario",
    "CostReport",
    "eval_age_cost",
    "integral_age_cost",
    "long_run_cost",
    "age_cost_from_dict",
]


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
    return value


class AgeCostSpec(abc.ABC):
    """A nondecreasing, unbounded age-related cost function C_a(t)."""

    kind: ClassVar[str]

    @abc.abstractmethod
    def value(self, t: float) -> float:
        """C_a(t) for a scalar t >= 0."""

    @abc.abstractmethod
    def values(self, t: np.ndarray) -> np.ndarray:
        """Vectorized C_a over an array of ages."""

    @abc.abstractmethod
    def integral(self, T: float) -> float:
        """Closed-form integral of C_a over [0, T]."""

    @abc.abstractmethod
    def derivative(self, t: float) -> float:
        """C_a'(t); one-sided (right) derivative at kinks."""

    @abc.abstractmethod
    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible representation."""

    def slope_hint(self) -> float:
        """Secant slope of C_a over [0, 1], used to warm-start root finding."""
        return self.value(1.0) - self.value(0.0)

    def __call__(self, t: float) -> float:
        return self.value(t)


@dataclass(frozen=True)
class Linear(AgeCostSpec):
    """C_a(t) = slope * t."""

    slope: float
    kind: ClassVar[str] = "linear"

    def __post_init__(self):
        object.__setattr__(self, "slope", _positive("slope", self.slope))

    def value(self, t):
        return self.slope * t

    def values(self, t):
        return self.slope * np.asarray(t, dtype=float)

    def integral(self, T):
        return 0.5 * self.slope * T * T

    def derivative(self, t):
        return self.slope

    def to_dict(self):
        return {"kind": self.kind, "slope": self.slope}


@dataclass(frozen=True)
class Power(AgeCostSpec):
    """C_a(t) = coeff * t**exp."""

    coeff: float
    exp: float
    kind: ClassVar[str] = "power"

    def __post_init__(self):
        object.__setattr__(self, "coeff", _positive("coeff", self.coeff))
        object.__setattr__(self, "exp", _positive("exp", self.exp))

    def value(self, t):
        return self.coeff * t**self.exp

    def values(self, t):
        return self.coeff * np.power(np.asarray(t, dtype=float), self.exp)

    def integral(self, T):
        return self.coeff * T ** (self.exp + 1.0) / (self.exp + 1.0)

    def derivative(self, t):
        if t == 0.0:
            return math.inf if self.exp < 1.0 else (self.coeff if self.exp == 1.0 else 0.0)
        return self.coeff * self.exp * t ** (self.exp - 1.0)

    def to_dict(self):
        return {"kind": self.kind, "coeff": self.coeff, "exp": self.exp}


@dataclass(frozen=True)
class Exponential(AgeCostSpec):
    """C_a(t) = scale * (exp(rate * t) - 1)."""

    scale: float
    rate: float
    kind: ClassVar[str] = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "scale", _positive("scale", self.scale))
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    def value(self, t):
        return self.scale * math.expm1(self.rate * t)

    def values(self, t):
        return self.scale * np.expm1(self.rate * np.asarray(t, dtype=float))

    def integral(self, T):
        x = self.rate * T
        if x < 1e-2:
            # expm1(x)/rate - T loses digits here; sum the series instead.
            term, total = x, 0.0
            for n in range(2, 10):
                term *= x / n
                total += term
            return self.scale * total / self.rate
        return self.scale * (math.expm1(x) / self.rate - T)

    def derivative(self, t):
        return self.scale * self.rate * math.exp(self.rate * t)

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale, "rate": self.rate}


@dataclass(frozen=True)
class Table(AgeCostSpec):
    """Piecewise-linear C_a through breakpoints (t_k, c_k).

    The first breakpoint must sit at t = 0. Beyond the last breakpoint the
    final segment's slope is extended linearly.
    """

    points: tuple[tuple[float, float], ...]
    kind: ClassVar[str] = "table"
    _ts: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _cs: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = tuple((float(t), float(c)) for t, c in self.points)
        if len(pts) < 2:
            raise DomainError("table needs at least two breakpoints")
        if not all(math.isfinite(t) and math.isfinite(c) for t, c in pts):
            raise DomainError("table breakpoints must be finite")
        ts = tuple(t for t, _ in pts)
        cs = tuple(c for _, c in pts)
        if ts[0] != 0.0:
            raise DomainError(f"first breakpoint must be at t=0, got {ts[0]}")
        if cs[0] < 0.0:
            raise DomainError(f"table cost at t=0 must be >= 0, got {cs[0]}")
        for k in range(1, len(pts)):
            if ts[k] <= ts[k - 1]:
                raise DomainError("table times must be strictly increasing")
            if cs[k] <= cs[k - 1]:
                raise DomainError("table costs must be strictly increasing")
        cum = [0.0]
        for k in range(1, len(pts)):
            cum.append(cum[-1] + 0.5 * (cs[k] + cs[k - 1]) * (ts[k] - ts[k - 1]))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_ts", ts)
        object.__setattr__(self, "_cs", cs)
        object.__setattr__(self, "_cum", tuple(cum))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self._ts

    def _segment(self, t: float) -> int:
        # Index k of the segment [t_k, t_{k+1}] holding t, clamped to the last one.
        k = bisect.bisect_right(self._ts, t) - 1
        return min(max(k, 0), len(self._ts) - 2)

    def _slope(self, k: int) -> float:
        return (self._cs[k + 1] - self._cs[k]) / (self._ts[k + 1] - self._ts[k])

    def value(self, t):
        k = self._segment(t)
        return self._cs[k] + self._slope(k) * (t - self._ts[k])

    def values(self, t):
        t = np.asarray(t, dtype=float)
        ts, cs = np.asarray(self._ts), np.asarray(self._cs)
        out = np.interp(t, ts, cs)
        last = self._slope(len(ts) - 2)
        return np.where(t > ts[-1], cs[-1] + last * (t - ts[-1]), out)

    def integral(self, T):
        k = self._segment(T)
        return self._cum[k] + 0.5 * (self._cs[k] + self.value(T)) * (T - self._ts[k])

    def derivative(self, t):
        return self._slope(self._segment(t))

    def to_dict(self):
        return {"kind": self.kind, "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class Sum(AgeCostSpec):
    """Nonnegative combination sum_j weight_j * C_j(t) of other specs.

    Used for cost-function ordering experiments (C_a2 = C_a1 + Delta) and for
    the rate-weighted fleet average.
    """

    terms: tuple[tuple[float, AgeCostSpec], ...]
    kind: ClassVar[str] = "sum"

    def __post_init__(self):
        terms = tuple((float(w), spec) for w, spec in self.terms)
        if not terms:
            raise DomainError("sum needs at least one term")
        for w, spec in terms:
            if not math.isfinite(w) or w < 0.0:
                raise DomainError(f"sum weights must be finite and >= 0, got {w!r}")
            if not isinstance(spec, AgeCostSpec):
                raise DomainError(f"sum term is not an age-cost spec: {spec!r}")
        if not any(w > 0.0 for w, _ in terms):
            raise DomainError("sum needs at least one positive weight")
        object.__setattr__(self, "terms", terms)

    def value(self, t):
        return math.fsum(w * s.value(t) for w, s in self.terms)

    def values(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for w, s in self.terms:
            out = out + w * s.values(t)
        return out

    def integral(self, T):
        return math.fsum(w * s.integral(T) for w, s in self.terms)

    def derivative(self, t):
        return math.fsum(w * s.derivative(t) for w, s in self.terms)

    def to_dict(self):
        return {
            "kind": self.kind,
            "terms": [{"weight": w, "age_cost": s.to_dict()} for w, s in self.terms],
        }

    def flatten(self) -> list[tuple[float, AgeCostSpec]]:
        """Expand nested sums into (weight, leaf spec) pairs."""
        out = []
        for w, s in self.terms:
            if isinstance(s, Sum):
                out.extend((w * w2, s2) for w2, s2 in s.flatten())
            else:
                out.append((w, s))
        return out


_KINDS = {cls.kind: cls for cls in (Linear, Power, Exponential, Table, Sum)}


def age_cost_from_dict(doc: Any) -> AgeCostSpec:
    """Build an age-cost spec from its JSON object form.

    Raises:
        SchemaError: unknown kind, missing or non-numeric fields.
        DomainError: fields present but out of range.
    """
    if not isinstance(doc, dict):
        raise SchemaError("age_cost must be an object")
    kind = doc.get("kind")
    if kind not in _KINDS:
        raise SchemaError(f"unknown age_cost kind {kind!r}; expected one of {sorted(_KINDS)}")
    if kind == "table":
        pts = doc.get("points")
        if not isinstance(pts, list) or not all(
            isinstance(p, (list, tuple)) and len(p) == 2 and all(_is_number(v) for v in p)
            for p in pts
        ):
            raise SchemaError("table points must be a list of [t, c] number pairs")
        return Table(tuple((p[0], p[1]) for p in pts))
    if kind == "sum":
        terms = doc.get("terms")
        if not isinstance(terms, list):
            raise SchemaError("sum terms must be a list")
        built = []
        for term in terms:
            if not isinstance(term, dict) or not _is_number(term.get("weight")):
                raise SchemaError("each sum term needs a numeric 'weight' and an 'age_cost'")
            built.append((term["weight"], age_cost_from_dict(term.get("age_cost"))))
        return Sum(tuple(built))
    fields = {"linear": ("slope",), "power": ("coeff", "exp"), "exponential": ("scale", "rate")}[kind]
    for name in fields:
        if not _is_number(doc.get(name)):
            raise SchemaError(f"{kind} age_cost needs numeric field {name!r}")
    return _KINDS[kind](*(doc[name] for name in fields))


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


@dataclass(frozen=True)
class Scenario:
    """Update rate, refresh cost, and age-cost function for one element.

    ``lam`` may be 0 for evaluation; the optimizer rejects it.
    """

    lam: float
    refresh_cost: float
    age_cost: AgeCostSpec

    def __post_init__(self):
        for name in ("lam", "refresh_cost"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0.0:
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, v)
        if not isinstance(self.age_cost, AgeCostSpec):
            raise DomainError(f"age_cost must be an AgeCostSpec, got {self.age_cost!r}")

    def replace(self, **changes) -> Scenario:
        kw = {"lam": self.lam, "refresh_cost": self.refresh_cost, "age_cost": self.age_cost}
        kw.update(changes)
        return Scenario(**kw)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lam,
            "refresh_cost": self.refresh_cost,
            "age_cost": self.age_cost.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: Any) -> Scenario:
        if not isinstance(doc, dict):
            raise SchemaError("scenario must be an object")
        for name in ("lambda", "refresh_cost"):
            if not _is_number(doc.get(name)):
                raise SchemaError(f"scenario needs numeric field {name!r}")
        return cls(doc["lambda"], doc["refresh_cost"], age_cost_from_dict(doc.get("age_cost")))


@dataclass(frozen=True)
class CostReport:
    """Long-run cost per unit time split into refresh and age parts."""

    total: float
    refresh_component: float
    age_component: float
    interval: float

    @classmethod
    def from_parts(cls, refresh: float, age: float, interval: float) -> CostReport:
        return cls(refresh + age, refresh, age, interval)

    def to_dict(self) -> dict[str, float]:
        return {
            "total": self.total,
            "refresh_component": self.refresh_component,
            "age_component": self.age_component,
            "interval": self.interval,
        }


def _check_time(name: str, t: float, strict: bool = False) -> float:
    t = float(t)
    if math.isnan(t) or t < 0.0 or (strict and t == 0.0):
        bound = "> 0" if strict else ">= 0"
        raise DomainError(f"{name} must be {bound}, got {t!r}")
    return t


def eval_age_cost(spec: AgeCostSpec, t: float) -> float:
    """Evaluate C_a(t) for t >= 0."""
    return spec.value(_check_time("t", t))


def integral_age_cost(spec: AgeCostSpec, T: float) -> float:
    """Integral of C_a over [0, T], in closed form."""
    return spec.integral(_check_time("T", T))


def long_run_cost(scn: Scenario, T: float) -> CostReport:
    """Long-run mean cost per unit time when refreshing every T time units.

    The refresh part is C_r / T and the age part is lam * int_0^T C_a / T.
    """
    T = _check_time("T", T, strict=True)
    return CostReport.from_parts(
        scn.refresh_cost / T, scn.lam * scn.age_cost.integral(T) / T, T
    )
