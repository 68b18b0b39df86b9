"""Optimal refresh interval for a single element.

The long-run cost C(T) has the same sign of slope as

    phi(T) = -C_r + lam * T * C_a(T) - lam * int_0^T C_a(t) dt,

which starts at -C_r, strictly increases, and diverges. Its unique zero is the
optimal refresh interval. Linear age costs have the closed form
T* = sqrt(2 C_r / (lam C)).
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cost_model import CostReport, Linear, Scenario, long_run_cost
from .errors import DomainError, PreconditionError
from .numerics import RootConfig, find_root_increasing

__all__ = [
    "Method",
    "OptimalPolicy",
    "phi",
    "optimal_interval",
    "closed_form_linear",
    "sweep_lambda",
    "sweep_refresh_cost",
    "compare_cost_functions",
    "CostOrdering",
]


class Method(str, enum.Enum):
    CLOSED_FORM_LINEAR = "closed_form_linear"
    NUMERIC_ROOT = "numeric_root"


@dataclass(frozen=True)
class OptimalPolicy:
    t_star: float
    cost_at_star: CostReport
    method: Method

    def to_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "cost": self.cost_at_star.total,
            "method": self.method.value,
        }


def phi(scn: Scenario, T: float) -> float:
    """T**2 * C'(T), the sign function of the cost slope."""
    T = float(T)
    if not T > 0.0:
        raise DomainError(f"T must be > 0, got {T!r}")
    try:
        gap = T * scn.age_cost.value(T) - scn.age_cost.integral(T)
    except OverflowError:
        # Only reachable for exponential costs at huge T, where phi is positive.
        return math.inf
    return -scn.refresh_cost + scn.lam * gap


def closed_form_linear(lam: float, refresh_cost: float, slope: float) -> tuple[float, float]:
    """(T*, C(T*)) for C_a(t) = slope * t."""
    for name, v in (("lambda", lam), ("refresh_cost", refresh_cost), ("slope", slope)):
        if not (math.isfinite(v) and v > 0.0):
            raise DomainError(f"{name} must be finite and > 0, got {v!r}")
    return math.sqrt(2.0 * refresh_cost / (lam * slope)), math.sqrt(2.0 * lam * slope * refresh_cost)


def _check_optimizable(scn: Scenario) -> None:
    if not scn.lam > 0.0:
        raise PreconditionError(f"no finite optimum: update rate must be > 0, got {scn.lam}")
    if not scn.refresh_cost > 0.0:
        raise PreconditionError(
            f"no finite optimum: refresh cost must be > 0, got {scn.refresh_cost}"
        )


def _hint(scn: Scenario) -> float:
    slope = scn.age_cost.slope_hint()
    if not (math.isfinite(slope) and slope > 0.0):
        return 1.0
    guess = math.sqrt(2.0 * scn.refresh_cost / (scn.lam * slope))
    return guess if math.isfinite(guess) and guess > 0.0 else 1.0


def optimal_interval(
    scn: Scenario,
    *,
    force_numeric: bool = False,
    cfg: RootConfig = RootConfig(),
) -> OptimalPolicy:
    """The unique refresh interval minimizing the long-run cost.

    Args:
        scn: Scenario with lam > 0 and refresh_cost > 0.
        force_numeric: Solve phi(T) = 0 even when a closed form exists.
        cfg: Root-finding tolerances.

    Raises:
        PreconditionError: lam or refresh_cost is not positive.
        NoFiniteRootError: phi never turns positive in the representable range.
    """
    _check_optimizable(scn)
    if isinstance(scn.age_cost, Linear) and not force_numeric:
        t_star, _ = closed_form_linear(scn.lam, scn.refresh_cost, scn.age_cost.slope)
        method = Method.CLOSED_FORM_LINEAR
    else:
        t_star = find_root_increasing(
            lambda T: phi(scn, T), 0.0, _hint(scn), cfg, g_lo=-scn.refresh_cost
        )
        method = Method.NUMERIC_ROOT
    return OptimalPolicy(t_star, long_run_cost(scn, t_star), method)


def _check_ascending(name: str, values: Sequence[float]) -> list[float]:
    vals = [float(v) for v in values]
    if not vals:
        raise DomainError(f"{name} sweep is empty")
    if any(not (math.isfinite(v) and v > 0.0) for v in vals):
        raise DomainError(f"{name} values must be finite and > 0")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise DomainError(f"{name} values must be strictly ascending")
    return vals


def sweep_lambda(
    scn_template: Scenario, lambdas: Sequence[float]
) -> list[tuple[float, OptimalPolicy]]:
    """Optimal policy for each update rate, other parameters held fixed."""
    return [
        (lam, optimal_interval(scn_template.replace(lam=lam)))
        for lam in _check_ascending("lambda", lambdas)
    ]


def sweep_refresh_cost(
    scn_template: Scenario, costs: Sequence[float]
) -> list[tuple[float, OptimalPolicy]]:
    """Optimal policy for each refresh cost, other parameters held fixed."""
    return [
        (c, optimal_interval(scn_template.replace(refresh_cost=c)))
        for c in _check_ascending("refresh_cost", costs)
    ]


class CostOrdering(NamedTuple):
    first: OptimalPolicy
    second: OptimalPolicy
    ordered: bool


def compare_cost_functions(
    scn1: Scenario, scn2: Scenario, *, n_grid: int = 64, tol: float = 1e-12
) -> CostOrdering:
    """Optima for two age-cost functions whose difference grows with age.

    Requires Delta(t) = C_a2(t) - C_a1(t) to be >= 0 and nondecreasing. This is
    checked on a geometric grid of ``n_grid`` ages over (0, 4 * max T*], with
    ``tol`` relative slack. Under that hypothesis the first optimum is never
    shorter than the second; ``ordered`` reports whether that held.

    Raises:
        DomainError: the scenarios differ in lam or refresh_cost.
        PreconditionError: sampled Delta is negative or decreasing.
    """
    if scn1.lam != scn2.lam or scn1.refresh_cost != scn2.refresh_cost:
        raise DomainError("scenarios must share lambda and refresh_cost")
    p1, p2 = optimal_interval(scn1), optimal_interval(scn2)
    hi = 4.0 * max(p1.t_star, p2.t_star)
    grid = np.geomspace(hi * 1e-6, hi, n_grid)
    c1 = scn1.age_cost.values(grid)
    c2 = scn2.age_cost.values(grid)
    delta = c2 - c1
    slack = tol * np.maximum(np.abs(c1), np.abs(c2))
    if np.any(delta < -slack):
        raise PreconditionError("cost difference C_a2 - C_a1 is negative on the sample grid")
    if np.any(np.diff(delta) < -np.maximum(slack[1:], slack[:-1])):
        raise PreconditionError("cost difference C_a2 - C_a1 decreases on the sample grid")
    ordered = p1.t_star >= p2.t_star * (1.0 - 1e-12)
    return CostOrdering(p1, p2, ordered)
