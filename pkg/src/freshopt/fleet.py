"""Uniform refresh interval for a fleet of cached elements.

Refreshing all M elements with one shared interval T costs

    C(T) = M * (Cr_bar / T + int_0^T Ca_bar(t) dt / T),

where Cr_bar is the mean refresh cost and Ca_bar(t) is the mean of
lam_i * C_a_i(t). That is the single-element problem with unit rate, so the
optimizer applies unchanged.

A fleet is given either as a list of elements (equal weights 1/M) or as a
weighted mesh approximating a distribution of update rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from .cost_model import AgeCostSpec, Linear, Scenario, Sum, age_cost_from_dict, long_run_cost
from .errors import DomainError, SchemaError
from .optimizer import OptimalPolicy, optimal_interval

__all__ = [
    "FleetMember",
    "FleetSpec",
    "averaged_refresh_cost",
    "averaged_age_cost",
    "averaged_scenario",
    "uniform_policy",
    "independent_optima",
    "amortized_connection_comparison",
]


@dataclass(frozen=True)
class FleetMember:
    lam: float
    refresh_cost: float
    age_cost: AgeCostSpec
    weight: float = 1.0

    def __post_init__(self):
        for name in ("lam", "refresh_cost", "weight"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0.0:
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, v)

    def scenario(self) -> Scenario:
        return Scenario(self.lam, self.refresh_cost, self.age_cost)


@dataclass(frozen=True)
class FleetSpec:
    """Elements sharing one refresh connection.

    Attributes:
        members: Discrete elements (``weighted=False``) or mesh points.
        conn_cost: Connection cost C_conn paid per refresh round.
        weighted: Members carry probability weights summing to 1.
        size: Number of elements M. Defaults to ``len(members)`` for the
            discrete form and to 1 for a mesh, i.e. costs per element.
    """

    members: tuple[FleetMember, ...]
    conn_cost: float = 0.0
    weighted: bool = False
    size: int | None = None

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise DomainError("fleet must contain at least one element")
        object.__setattr__(self, "members", members)
        if not (math.isfinite(self.conn_cost) and self.conn_cost >= 0.0):
            raise DomainError(f"conn_cost must be finite and >= 0, got {self.conn_cost!r}")
        if self.weighted:
            total = math.fsum(m.weight for m in members)
            if abs(total - 1.0) > 1e-9:
                raise DomainError(f"mesh weights must sum to 1, got {total!r}")
        if self.size is None:
            object.__setattr__(self, "size", 1 if self.weighted else len(members))
        elif self.size < 1:
            raise DomainError(f"fleet size must be >= 1, got {self.size}")
        elif not self.weighted and self.size != len(members):
            raise DomainError("discrete fleet size must equal the number of elements")

    @classmethod
    def of_elements(cls, scenarios, conn_cost: float = 0.0) -> FleetSpec:
        """Discrete fleet from per-element scenarios."""
        return cls(
            tuple(FleetMember(s.lam, s.refresh_cost, s.age_cost) for s in scenarios), conn_cost
        )

    def weights(self) -> list[float]:
        if self.weighted:
            return [m.weight for m in self.members]
        return [1.0 / len(self.members)] * len(self.members)

    def to_dict(self) -> dict[str, Any]:
        def member(m: FleetMember) -> dict[str, Any]:
            doc = {"lambda": m.lam, "refresh_cost": m.refresh_cost, "age_cost": m.age_cost.to_dict()}
            if self.weighted:
                doc["weight"] = m.weight
            return doc

        key = "mesh" if self.weighted else "elements"
        doc: dict[str, Any] = {"conn_cost": self.conn_cost, key: [member(m) for m in self.members]}
        if self.weighted and self.size != 1:
            doc["size"] = self.size
        return doc

    @classmethod
    def from_dict(cls, doc: Any) -> FleetSpec:
        if not isinstance(doc, dict):
            raise SchemaError("fleet must be an object")
        if ("elements" in doc) == ("mesh" in doc):
            raise SchemaError("fleet needs exactly one of 'elements' or 'mesh'")
        weighted = "mesh" in doc
        rows = doc["mesh" if weighted else "elements"]
        if not isinstance(rows, list):
            raise SchemaError("fleet elements must be a list")
        members = []
        for row in rows:
            if not isinstance(row, dict):
                raise SchemaError("fleet element must be an object")
            names = ("lambda", "refresh_cost") + (("weight",) if weighted else ())
            for name in names:
                v = row.get(name)
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise SchemaError(f"fleet element needs numeric field {name!r}")
            members.append(
                FleetMember(
                    row["lambda"],
                    row["refresh_cost"],
                    age_cost_from_dict(row.get("age_cost")),
                    row.get("weight", 1.0),
                )
            )
        conn = doc.get("conn_cost", 0.0)
        if not isinstance(conn, (int, float)) or isinstance(conn, bool):
            raise SchemaError("conn_cost must be a number")
        size = doc.get("size")
        if size is not None and (not isinstance(size, int) or isinstance(size, bool)):
            raise SchemaError("size must be an integer")
        return cls(tuple(members), float(conn), weighted, size)


def averaged_refresh_cost(fs: FleetSpec) -> float:
    """Weighted mean refresh cost over the fleet."""
    return math.fsum(w * m.refresh_cost for w, m in zip(fs.weights(), fs.members))


def averaged_age_cost(fs: FleetSpec, t: float) -> float:
    """Weighted mean of lam_i * C_a_i(t); note the rate inside the average."""
    t = float(t)
    if not t >= 0.0:
        raise DomainError(f"t must be >= 0, got {t!r}")
    return math.fsum(w * m.lam * m.age_cost.value(t) for w, m in zip(fs.weights(), fs.members))


def averaged_scenario(fs: FleetSpec) -> Scenario:
    """Unit-rate scenario whose cost is the fleet cost divided by M.

    Raises:
        PreconditionError: via the optimizer if every element has rate zero.
    """
    terms = tuple(
        (w * m.lam, m.age_cost) for w, m in zip(fs.weights(), fs.members) if w * m.lam > 0.0
    )
    if not terms:
        # All rates are zero: keep a valid spec but no update pressure.
        return Scenario(0.0, averaged_refresh_cost(fs), fs.members[0].age_cost)
    if all(isinstance(s, Linear) for _, s in terms):
        spec: AgeCostSpec = Linear(math.fsum(w * s.slope for w, s in terms))
    elif len(terms) == 1 and terms[0][0] == 1.0:
        spec = terms[0][1]
    else:
        spec = Sum(terms)
    return Scenario(1.0, averaged_refresh_cost(fs), spec)


def _fleet_total(fs: FleetSpec, avg: Scenario, T: float) -> float:
    return fs.size * long_run_cost(avg, T).total


def uniform_policy(fs: FleetSpec) -> tuple[float, float]:
    """Shared optimal interval and the fleet's total cost per unit time there."""
    avg = averaged_scenario(fs)
    policy = optimal_interval(avg)
    return policy.t_star, _fleet_total(fs, avg, policy.t_star)


def independent_optima(fs: FleetSpec) -> list[OptimalPolicy]:
    """Each element's own optimum, ignoring the shared connection."""
    return [optimal_interval(m.scenario()) for m in fs.members]


def amortized_connection_comparison(fs: FleetSpec) -> tuple[float, float]:
    """Connection cost per element: shared by M under uniform refresh, or paid alone."""
    return fs.conn_cost / fs.size, fs.conn_cost
