"""Monte Carlo renewal simulator for refresh schedules.

Each refresh cycle is simulated independently: draw the cycle length, draw a
Poisson number of updates, place them uniformly inside the cycle, and charge
C_r plus C_a(age at refresh) for every update. The long-run cost is estimated
by the renewal-reward ratio sum(cycle cost) / sum(cycle length).

Randomness: cycles are grouped into fixed-size blocks. Block ``b`` draws from
a PCG64 generator seeded with ``SeedSequence(seed, spawn_key=(b,))``, so a run
is reproducible bit for bit and does not depend on how many threads simulate
the blocks. Block statistics are merged in block order.
"""

from __future__ import annotations

import csv
import math
import os
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Any, Union

import numpy as np

from .cost_model import CostReport, Scenario
from .errors import DomainError, SchemaError
from .random_schedule import IntervalDistribution, distribution_from_dict

__all__ = [
    "FixedSchedule",
    "RandomSchedule",
    "ScheduleSpec",
    "schedule_from_dict",
    "SimConfig",
    "SimResult",
    "CycleBatch",
    "block_rng",
    "simulate_block",
    "simulate_cycle",
    "simulate",
    "aggregated_age",
    "default_threads",
]

DEFAULT_BLOCK_SIZE = 1 << 14


@dataclass(frozen=True)
class FixedSchedule:
    interval: float

    def __post_init__(self):
        v = float(self.interval)
        if not (math.isfinite(v) and v > 0.0):
            raise DomainError(f"fixed refresh interval must be > 0, got {v!r}")
        object.__setattr__(self, "interval", v)

    def mean(self) -> float:
        return self.interval

    def lengths(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.interval)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "fixed", "t": self.interval}


@dataclass(frozen=True)
class RandomSchedule:
    distribution: IntervalDistribution

    def mean(self) -> float:
        return self.distribution.mean()

    def lengths(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.distribution.sample(rng, n)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "random", "distribution": self.distribution.to_dict()}


ScheduleSpec = Union[FixedSchedule, RandomSchedule]


def schedule_from_dict(doc: Any) -> ScheduleSpec:
    """Parse ``{"kind": "fixed", "t": T}`` or ``{"kind": "random", "distribution": {...}}``."""
    if not isinstance(doc, dict):
        raise SchemaError("schedule must be an object")
    kind = doc.get("kind")
    if kind == "fixed":
        t = doc.get("t")
        if not isinstance(t, (int, float)) or isinstance(t, bool):
            raise SchemaError("fixed schedule needs numeric field 't'")
        return FixedSchedule(t)
    if kind == "random":
        return RandomSchedule(distribution_from_dict(doc.get("distribution")))
    raise SchemaError(f"unknown schedule kind {kind!r}; expected 'fixed' or 'random'")


@dataclass(frozen=True)
class SimConfig:
    seed: int
    n_cycles: int
    schedule: ScheduleSpec
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.n_cycles < 1:
            raise DomainError(f"n_cycles must be >= 1, got {self.n_cycles}")
        if self.block_size < 1:
            raise DomainError(f"block_size must be >= 1, got {self.block_size}")


@dataclass(frozen=True)
class SimResult:
    """Estimated long-run cost per unit time.

    ``std_error`` comes from the delta method for the ratio estimator and is
    ``inf`` for a single cycle.
    """

    mean_cost_per_time: float
    std_error: float
    n_updates_total: int
    n_cycles: int
    breakdown: CostReport

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean_cost_per_time": self.mean_cost_per_time,
            "std_error": self.std_error,
            "n_updates_total": self.n_updates_total,
            "n_cycles": self.n_cycles,
            "breakdown": self.breakdown.to_dict(),
        }


@dataclass(frozen=True)
class CycleBatch:
    """Per-cycle outcomes of one simulated block."""

    lengths: np.ndarray
    n_updates: np.ndarray
    costs: np.ndarray


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Generator for block ``block`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def simulate_block(
    scn: Scenario, schedule: ScheduleSpec, rng: np.random.Generator, n: int
) -> CycleBatch:
    """Simulate ``n`` consecutive refresh cycles with one generator.

    Draw order is fixed: cycle lengths, Poisson counts, then one uniform per
    update. An update at offset S in a cycle of length L has age L - S at the
    refresh, and L - S is uniform on [0, L) given the count.
    """
    lengths = np.asarray(schedule.lengths(rng, n), dtype=float)
    if scn.lam > 0.0:
        counts = rng.poisson(scn.lam * lengths)
    else:
        counts = np.zeros(n, dtype=np.int64)
    owner = np.repeat(np.arange(n), counts)
    ages = lengths[owner] * rng.random(owner.size)
    age_cost = np.bincount(owner, weights=scn.age_cost.values(ages), minlength=n)
    return CycleBatch(lengths, counts, scn.refresh_cost + age_cost)


def simulate_cycle(
    scn: Scenario,
    cycle_len: float,
    rng: np.random.Generator | None = None,
    arrivals: Sequence[float] | None = None,
) -> tuple[float, int]:
    """Cost of one refresh cycle and its number of updates.

    Update times are drawn from ``rng`` unless ``arrivals`` injects them
    explicitly (offsets in (0, cycle_len]).
    """
    cycle_len = float(cycle_len)
    if not cycle_len > 0.0:
        raise DomainError(f"cycle_len must be > 0, got {cycle_len!r}")
    if arrivals is None:
        if rng is None:
            raise DomainError("either rng or arrivals is required")
        n = int(rng.poisson(scn.lam * cycle_len)) if scn.lam > 0.0 else 0
        times = np.sort(cycle_len * (1.0 - rng.random(n)))
    else:
        times = np.asarray(sorted(float(s) for s in arrivals))
        if times.size and (times[0] <= 0.0 or times[-1] > cycle_len):
            raise DomainError("injected arrivals must lie in (0, cycle_len]")
    ages = cycle_len - times
    return scn.refresh_cost + math.fsum(scn.age_cost.values(ages)), int(times.size)


def aggregated_age(update_times: Sequence[float], t: float) -> float:
    """Sum of ages at time t of the updates that arrived strictly before t."""
    times = [float(s) for s in update_times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise DomainError("update times must be sorted ascending")
    if times and times[0] < 0.0:
        raise DomainError("update times must be >= 0")
    return math.fsum(t - s for s in times if s < t)


@dataclass
class _Moments:
    # Running means and centered co-moments of (cost, length) pairs.
    n: int = 0
    updates: int = 0
    mean_cost: float = 0.0
    mean_len: float = 0.0
    s_cc: float = 0.0
    s_cl: float = 0.0
    s_ll: float = 0.0

    @classmethod
    def of(cls, batch: CycleBatch) -> _Moments:
        c, y = batch.costs, batch.lengths
        mc, ml = float(np.mean(c)), float(np.mean(y))
        dc, dl = c - mc, y - ml
        return cls(
            n=c.size,
            updates=int(batch.n_updates.sum()),
            mean_cost=mc,
            mean_len=ml,
            s_cc=float(dc @ dc),
            s_cl=float(dc @ dl),
            s_ll=float(dl @ dl),
        )

    def merge(self, o: _Moments) -> _Moments:
        if self.n == 0:
            return o
        n = self.n + o.n
        dc, dl = o.mean_cost - self.mean_cost, o.mean_len - self.mean_len
        f = self.n * o.n / n
        return _Moments(
            n=n,
            updates=self.updates + o.updates,
            mean_cost=self.mean_cost + dc * o.n / n,
            mean_len=self.mean_len + dl * o.n / n,
            s_cc=self.s_cc + o.s_cc + f * dc * dc,
            s_cl=self.s_cl + o.s_cl + f * dc * dl,
            s_ll=self.s_ll + o.s_ll + f * dl * dl,
        )


def default_threads() -> int:
    """Thread cap from FRESHOPT_THREADS, defaulting to 1."""
    raw = os.environ.get("FRESHOPT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise DomainError(f"FRESHOPT_THREADS must be an integer, got {raw!r}") from None


def _blocks(cfg: SimConfig) -> list[tuple[int, int]]:
    full, rest = divmod(cfg.n_cycles, cfg.block_size)
    sizes = [cfg.block_size] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def simulate(
    scn: Scenario,
    cfg: SimConfig,
    *,
    threads: int | None = None,
    trace: IO[str] | None = None,
) -> SimResult:
    """Estimate the long-run cost per unit time by simulating renewal cycles.

    Args:
        scn: Scenario to simulate; lam = 0 is allowed.
        cfg: Seed, cycle count, and schedule.
        threads: Worker threads; defaults to FRESHOPT_THREADS. Results do not
            depend on it.
        trace: If given, receives CSV rows
            ``cycle_index,cycle_len,n_updates,cycle_cost`` for every cycle.
    """
    threads = default_threads() if threads is None else max(1, int(threads))

    def run(block: tuple[int, int]) -> tuple[_Moments, CycleBatch | None]:
        index, size = block
        batch = simulate_block(scn, cfg.schedule, block_rng(cfg.seed, index), size)
        return _Moments.of(batch), (batch if trace is not None else None)

    blocks = _blocks(cfg)
    if threads == 1 or len(blocks) == 1:
        outputs: Iterable = map(run, blocks)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        outputs = pool.map(run, blocks)

    total = _Moments()
    writer = csv.writer(trace, lineterminator="\n") if trace is not None else None
    if writer is not None:
        writer.writerow(["cycle_index", "cycle_len", "n_updates", "cycle_cost"])
    offset = 0
    try:
        for moments, batch in outputs:
            total = total.merge(moments)
            if writer is not None:
                for i in range(batch.costs.size):
                    writer.writerow(
                        [
                            offset + i,
                            f"{batch.lengths[i]:.17g}",
                            int(batch.n_updates[i]),
                            f"{batch.costs[i]:.17g}",
                        ]
                    )
            offset += moments.n
    finally:
        if threads != 1 and len(blocks) != 1:
            pool.shutdown()

    ratio = total.mean_cost / total.mean_len
    if total.n > 1:
        resid = total.s_cc - 2.0 * ratio * total.s_cl + ratio * ratio * total.s_ll
        std_error = math.sqrt(max(resid, 0.0) / (total.n - 1) / total.n) / total.mean_len
    else:
        std_error = math.inf
    refresh = scn.refresh_cost / total.mean_len
    breakdown = CostReport.from_parts(refresh, max(ratio - refresh, 0.0), total.mean_len)
    return SimResult(ratio, std_error, total.updates, total.n, breakdown)
