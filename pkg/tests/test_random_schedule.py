import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate
from scipy import stats
from scipy.optimize import minimize_scalar

from freshopt import (
    Degenerate,
    DomainError,
    Exponential,
    ExponentialInterval,
    GammaInterval,
    InfiniteCostError,
    Linear,
    Power,
    Scenario,
    SchemaError,
    Table,
    Uniform,
    compare_random_vs_fixed,
    distribution_from_dict,
    long_run_cost,
    mean,
    optimal_interval,
    random_schedule_cost,
    survival,
)

from conftest import random_scenario


def scipy_dist(d):
    if isinstance(d, Uniform):
        return stats.uniform(loc=d.a, scale=d.b - d.a)
    if isinstance(d, ExponentialInterval):
        return stats.expon(scale=d.mean())
    if isinstance(d, GammaInterval):
        return stats.gamma(d.shape, scale=d.scale)
    raise TypeError(d)


def oracle_cost(scn, d):
    """C_r/mu + lam * int_0^inf C_a(t) P(Y > t) dt / mu by scipy quadrature."""
    mu = d.mean()
    if isinstance(d, Degenerate):
        age, _ = sp_integrate.quad(scn.age_cost.value, 0, d.t, epsabs=0, epsrel=1e-13, limit=400)
    else:
        ref = scipy_dist(d)
        hi = ref.isf(1e-17)
        pts = [p for p in (d.support()[0], mu, *getattr(scn.age_cost, "breakpoints", ())) if 0 < p < hi]
        ac = scn.age_cost

        def f(t):
            if isinstance(ac, Exponential):
                # a * (exp(b t) - 1) * sf(t) in log space; exp(b t) overflows in far tails.
                return ac.scale * (math.exp(ac.rate * t + ref.logsf(t)) - ref.sf(t))
            return ac.value(t) * ref.sf(t)

        age, _ = sp_integrate.quad(f, 0, hi, points=pts, epsabs=0, epsrel=1e-12, limit=1000)
        if not isinstance(d, Uniform):
            age += sp_integrate.quad(f, hi, np.inf, epsabs=0, epsrel=1e-12, limit=1000)[0]
    return scn.refresh_cost / mu + scn.lam * age / mu


def test_mean_examples():
    assert mean(Degenerate(2)) == 2
    assert mean(Uniform(1, 3)) == 2
    assert mean(GammaInterval(2, 1.5)) == 3
    assert mean(ExponentialInterval(0.7)) == 0.7


def test_survival_examples():
    assert survival(Degenerate(2), 1) == 1 and survival(Degenerate(2), 3) == 0
    assert survival(ExponentialInterval(2), 2) == pytest.approx(math.exp(-1), rel=1e-15)
    assert survival(Uniform(1, 3), 2) == 0.5
    assert survival(Uniform(1, 3), 0.5) == 1 and survival(Uniform(1, 3), 4) == 0
    with pytest.raises(DomainError):
        survival(Uniform(1, 3), -1)


@pytest.mark.parametrize("d", [ExponentialInterval(1.3), GammaInterval(2.5, 0.8), Uniform(0.5, 4)])
def test_survival_matches_scipy(d):
    ref = scipy_dist(d)
    for t in np.linspace(0, 10, 41):
        assert survival(d, t) == pytest.approx(ref.sf(t), rel=1e-12, abs=1e-300)
        assert d.cdf(t) == pytest.approx(ref.cdf(t), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("d", [ExponentialInterval(1.3), GammaInterval(2.5, 0.8), Uniform(0.5, 4)])
def test_moments_match_scipy(d):
    ref = scipy_dist(d)
    for m in (0.5, 1.0, 2.0, 3.7):
        exact = sp_integrate.quad(lambda t: t**m * ref.pdf(t), *ref.support(), epsrel=1e-13)[0]
        assert d.moment(m) == pytest.approx(exact, rel=1e-10)
    hi = ref.isf(1e-20)
    mgf = sp_integrate.quad(lambda t: math.exp(0.2 * t) * ref.pdf(t), ref.support()[0], hi, epsrel=1e-13)[0]
    assert d.mgf(0.2) == pytest.approx(mgf, rel=1e-9)


def test_tail_truncation_point():
    for d in (ExponentialInterval(2.0), GammaInterval(3.0, 0.5)):
        hi = d.support()[1]
        assert d.survival(hi) == pytest.approx(1e-15, rel=1e-6)


@pytest.mark.parametrize(
    "factory", [lambda: Degenerate(0), lambda: Uniform(2, 1), lambda: Uniform(0, 1),
                lambda: ExponentialInterval(-1), lambda: GammaInterval(0, 1)]
)
def test_invalid_distributions(factory):
    with pytest.raises(DomainError):
        factory()


def test_distribution_json():
    docs = [
        {"kind": "degenerate", "t": 2.0},
        {"kind": "uniform", "a": 1, "b": 3},
        {"kind": "exponential", "mean": 2},
        {"kind": "gamma", "shape": 2, "scale": 1.5},
    ]
    for doc in docs:
        d = distribution_from_dict(doc)
        assert distribution_from_dict(d.to_dict()) == d
    with pytest.raises(SchemaError):
        distribution_from_dict({"kind": "weibull"})
    with pytest.raises(SchemaError):
        distribution_from_dict({"kind": "uniform", "a": 1})


def test_random_cost_examples(linear_scn):
    deg = random_schedule_cost(linear_scn, Degenerate(2))
    assert deg.total == 2.0 and deg == long_run_cost(linear_scn, 2.0)
    exp = random_schedule_cost(linear_scn, ExponentialInterval(2))
    assert exp.total == pytest.approx(3.0, rel=1e-14)
    uni = random_schedule_cost(linear_scn, Uniform(1, 3))
    # Oracle: 1 + int_0^inf t P(Y > t) dt / 2 with the integral by scipy quadrature.
    assert uni.total == pytest.approx(oracle_cost(linear_scn, Uniform(1, 3)), rel=1e-12)
    assert uni.total == pytest.approx(2.0833333333333335, rel=1e-12)
    assert 2.0 < uni.total < 3.0


def test_divergent_cost_detected():
    scn = Scenario(1.0, 1.0, Exponential(1.0, 0.5))
    with pytest.raises(InfiniteCostError):
        random_schedule_cost(scn, ExponentialInterval(2.0))
    with pytest.raises(InfiniteCostError):
        random_schedule_cost(scn, GammaInterval(3.0, 2.5))
    # b * mu < 1 converges: a * (1/(1 - b mu) - 1)/b - a mu with a=1, b=0.5, mu=1.
    ok = random_schedule_cost(scn, ExponentialInterval(1.0))
    assert ok.age_component == pytest.approx(2.0 * (2.0 - 1.0) - 1.0, rel=1e-14)


def test_zero_rate_is_pure_refresh():
    scn = Scenario(0.0, 3.0, Exponential(1.0, 5.0))
    rep = random_schedule_cost(scn, Uniform(1.0, 2.0))
    assert rep.total == 2.0 and rep.age_component == 0.0


def _random_distribution(rng, center):
    kind = rng.randrange(3)
    if kind == 0:
        return Uniform.around(center, rng.uniform(0.01, 0.99) * center)
    if kind == 1:
        return ExponentialInterval(center)
    shape = rng.uniform(0.3, 20.0)
    return GammaInterval(shape, center / shape)


def test_closed_forms_match_quadrature_oracle():
    rng = random.Random(5)
    checked = 0
    while checked < 60:
        scn = random_scenario(rng)
        center = optimal_interval(scn).t_star * rng.uniform(0.3, 2.0)
        d = _random_distribution(rng, center)
        try:
            got = random_schedule_cost(scn, d)
        except InfiniteCostError:
            continue
        assert got.total == pytest.approx(oracle_cost(scn, d), rel=1e-8)
        checked += 1


def test_compare_examples(linear_scn):
    res = compare_random_vs_fixed(linear_scn, Degenerate(2))
    assert res.gap == 0.0 and res.c_h == res.c_fixed
    res = compare_random_vs_fixed(linear_scn, ExponentialInterval(2))
    assert res.gap == pytest.approx(1.0, rel=1e-12)
    assert res.c_fixed.total == 2.0


def test_uniform_gap_shrinks(linear_scn):
    gaps = [compare_random_vs_fixed(linear_scn, Uniform.around(2, d)).gap for d in (1, 0.1, 0.01)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    # Linear costs: gap = lam * C * Var(Y) / (2 mu) = delta**2 / 12.
    assert gaps == pytest.approx([1 / 12, 0.01 / 12, 1e-4 / 12], rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 5))
def test_uniform_limit_linear(lam, cr, c, T):
    scn = Scenario(lam, cr, Linear(c))
    deltas = T * np.array([0.9, 0.5, 0.1, 0.05, 0.01, 1e-3])
    gaps = [compare_random_vs_fixed(scn, Uniform.around(T, d)).gap for d in deltas]
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    # Half-width d gives Var(Y) = d**2 / 3, so the gap is lam * c * d**2 / (6 T).
    assert gaps == pytest.approx(lam * c * deltas**2 / (6 * T), rel=1e-8)


def test_gap_matches_subtraction():
    rng = random.Random(8)
    for _ in range(60):
        scn = random_scenario(rng)
        d = _random_distribution(rng, optimal_interval(scn).t_star * rng.uniform(0.3, 2.0))
        try:
            res = compare_random_vs_fixed(scn, d)
        except InfiniteCostError:
            continue
        direct = res.c_h.total - res.c_fixed.total
        assert res.gap == pytest.approx(direct, rel=1e-7, abs=1e-10 * res.c_h.total)


def test_gap_nonnegative_and_zero_only_for_degenerate():
    rng = random.Random(21)
    n = 0
    while n < 100:
        scn = random_scenario(rng)
        center = rng.uniform(0.05, 5.0)
        if rng.random() < 0.1:
            d = Degenerate(center)
        else:
            d = _random_distribution(rng, center)
        try:
            res = compare_random_vs_fixed(scn, d)
        except InfiniteCostError:
            continue
        assert res.gap >= -1e-12
        assert (res.gap == 0.0) == isinstance(d, Degenerate)
        n += 1


@pytest.mark.parametrize(
    "scn",
    [
        Scenario(1.0, 2.0, Linear(1.0)),
        Scenario(2.0, 1.0, Power(1.0, 2.0)),
        Scenario(0.5, 3.0, Table(((0, 0.5), (1, 1), (3, 4)))),
        Scenario(1.0, 1.0, Exponential(1.0, 0.3)),
    ],
)
def test_random_schedules_never_beat_fixed_optimum(scn):
    best_fixed = optimal_interval(scn).cost_at_star.total
    t_star = optimal_interval(scn).t_star

    families = {
        "exponential": lambda m: ExponentialInterval(m),
        "uniform-half": lambda m: Uniform.around(m, 0.5 * m),
        "uniform-tight": lambda m: Uniform.around(m, 0.01 * m),
        "gamma-4": lambda m: GammaInterval(4.0, m / 4.0),
        "gamma-100": lambda m: GammaInterval(100.0, m / 100.0),
    }
    for name, make in families.items():
        def cost(log_m):
            try:
                return random_schedule_cost(scn, make(math.exp(log_m))).total
            except InfiniteCostError:
                return math.inf

        res = minimize_scalar(
            cost, bounds=(math.log(t_star) - 3, math.log(t_star) + 1), method="bounded",
            options={"xatol": 1e-10},
        )
        assert res.fun >= best_fixed - 1e-9, name
    # Tight uniform intervals approach the fixed optimum.
    tight = random_schedule_cost(scn, Uniform.around(t_star, 1e-3 * t_star)).total
    assert tight == pytest.approx(best_fixed, rel=1e-6)


@pytest.mark.parametrize(
    "d", [GammaInterval(1.0728, 1.0786), ExponentialInterval(1.08), GammaInterval(0.4, 1.09)]
)
def test_gap_near_divergence(d):
    # b * theta is about 0.99: the integrand outlives the survival truncation point.
    scn = Scenario(9.06, 8.1, Exponential(3.967, 0.9164))
    res = compare_random_vs_fixed(scn, d)
    direct = res.c_h.total - res.c_fixed.total
    assert res.gap == pytest.approx(direct, rel=1e-9)


def test_table_tail_beyond_truncation():
    # Last breakpoint far beyond where P(Y > t) = 1e-15.
    scn = Scenario(1.0, 1.0, Table(((0, 0), (1, 1), (500, 2))))
    d = ExponentialInterval(2.0)
    assert random_schedule_cost(scn, d).total == pytest.approx(oracle_cost(scn, d), rel=1e-9)
    res = compare_random_vs_fixed(scn, d)
    assert res.gap == pytest.approx(res.c_h.total - res.c_fixed.total, rel=1e-7)
