import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from freshopt import (
    DomainError,
    Linear,
    Method,
    Power,
    PreconditionError,
    Scenario,
    Sum,
    Table,
    closed_form_linear,
    compare_cost_functions,
    long_run_cost,
    optimal_interval,
    phi,
    sweep_lambda,
    sweep_refresh_cost,
)

from conftest import random_scenario, scenarios

# Bisection on the hand-derived phi_2(T) = -2 + T**2/2 + 2*T**3/3 for
# C_a2 = t + t**2, lam = 1, C_r = 2; computed once and frozen.
T_STAR_T_PLUS_T2 = 1.2306980021712666


def _bisect(g, lo, hi, n=200):
    for _ in range(n):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_frozen_oracle_value():
    assert _bisect(lambda T: -2 + T**2 / 2 + 2 * T**3 / 3, 0.0, 5.0) == pytest.approx(
        T_STAR_T_PLUS_T2, rel=1e-15
    )


def test_phi_examples(linear_scn):
    assert phi(linear_scn, 2.0) == 0.0
    # -C_r + lam*T*C_a(T) - lam*T**2/2 = -2 + 1 - 0.5
    assert phi(linear_scn, 1.0) == -1.5
    for spec in (Linear(2), Power(1, 0.5), Table(((0, 1), (1, 3)))):
        assert phi(Scenario(1.5, 2.0, spec), 1e-12) == pytest.approx(-2.0, abs=1e-9)


def test_phi_rejects_nonpositive(linear_scn):
    with pytest.raises(DomainError):
        phi(linear_scn, 0.0)


@pytest.mark.parametrize(
    "args, expected",
    [((1, 2, 1), (2, 2)), ((2, 1, 1), (1, 2)), ((1, 0.5, 1), (1, 1))],
)
def test_closed_form_linear(args, expected):
    assert closed_form_linear(*args) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
def test_closed_form_linear_domain(args):
    with pytest.raises(DomainError):
        closed_form_linear(*args)


def test_optimal_interval_linear(linear_scn):
    pol = optimal_interval(linear_scn)
    assert pol.method is Method.CLOSED_FORM_LINEAR
    assert pol.t_star == 2.0 and pol.cost_at_star.total == 2.0
    # Brute-force grid over (0, 10] with step 1e-4.
    grid = np.arange(1, 100_001) * 1e-4
    costs = 2.0 / grid + grid / 2.0
    assert grid[np.argmin(costs)] == pytest.approx(2.0, abs=1e-4)


def test_optimal_interval_power():
    pol = optimal_interval(Scenario(1.0, 2.0 / 3.0, Power(1, 2)))
    assert pol.method is Method.NUMERIC_ROOT
    oracle = _bisect(lambda T: (2 / 3) * T**3 - 2 / 3, 0.0, 4.0)
    assert pol.t_star == pytest.approx(oracle, rel=1e-11)
    assert pol.t_star == pytest.approx(1.0, rel=1e-11)


def test_scaling_cost_and_slope_leaves_optimum():
    base = optimal_interval(Scenario(1.3, 2.0, Linear(0.7))).t_star
    for k in (0.1, 3.0, 50.0):
        assert optimal_interval(Scenario(1.3, 2.0 * k, Linear(0.7 * k))).t_star == pytest.approx(
            base, rel=1e-14
        )


@pytest.mark.parametrize("lam, cr", [(0.0, 1.0), (1.0, 0.0)])
def test_no_finite_optimum(lam, cr):
    with pytest.raises(PreconditionError, match="no finite optimum"):
        optimal_interval(Scenario(lam, cr, Linear(1)))


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100))
def test_numeric_matches_closed_form(lam, cr, c):
    scn = Scenario(lam, cr, Linear(c))
    numeric = optimal_interval(scn, force_numeric=True)
    assert numeric.method is Method.NUMERIC_ROOT
    assert numeric.t_star == pytest.approx(math.sqrt(2 * cr / (lam * c)), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(scenarios)
def test_sign_structure_and_minimality(scn):
    pol = optimal_interval(scn)
    t = pol.t_star
    assert abs(phi(scn, t)) <= 1e-6 * scn.refresh_cost
    for T in np.geomspace(t / 100, t * (1 - 1e-6), 20):
        assert phi(scn, T) < 0
    for T in np.geomspace(t * (1 + 1e-6), t * 100, 20):
        assert phi(scn, T) > 0
    best = pol.cost_at_star.total
    for T in np.geomspace(t / 100, t * 100, 101):
        assert best <= long_run_cost(scn, T).total * (1 + 1e-12)
    assert best <= long_run_cost(scn, 0.5 * t).total
    assert best <= long_run_cost(scn, 2.0 * t).total


def test_optimum_matches_scipy_brentq():
    rng = random.Random(11)
    for _ in range(50):
        scn = random_scenario(rng)
        pol = optimal_interval(scn)
        ref = brentq(lambda T: phi(scn, T), 1e-12, 1e3 * pol.t_star + 1.0, xtol=1e-15, rtol=1e-14)
        assert pol.t_star == pytest.approx(ref, rel=1e-10)


def test_sweep_lambda_examples():
    tmpl = Scenario(1.0, 2.0, Linear(1.0))
    got = [p.t_star for _, p in sweep_lambda(tmpl, [1, 2, 4])]
    assert got == pytest.approx([2, math.sqrt(2), 1], rel=1e-15)
    got = [p.t_star for _, p in sweep_lambda(Scenario(1, 2 / 3, Power(1, 2)), [1, 8])]
    assert got == pytest.approx([1, 0.5], rel=1e-11)
    ((lam, single),) = sweep_lambda(tmpl, [3.0])
    assert lam == 3.0 and single == optimal_interval(tmpl.replace(lam=3.0))


def test_sweep_refresh_cost_examples():
    tmpl = Scenario(1.0, 1.0, Linear(1.0))
    assert [p.t_star for _, p in sweep_refresh_cost(tmpl, [2, 8])] == pytest.approx([2, 4])
    assert [p.t_star for _, p in sweep_refresh_cost(tmpl, [0.5, 2])] == pytest.approx([1, 2])
    ((_, single),) = sweep_refresh_cost(tmpl, [5.0])
    assert single == optimal_interval(tmpl.replace(refresh_cost=5.0))


@pytest.mark.parametrize("values", [[2, 1], [1, 1], [0, 1], [], [-1]])
def test_sweeps_validate(values):
    tmpl = Scenario(1.0, 1.0, Linear(1.0))
    with pytest.raises(DomainError):
        sweep_lambda(tmpl, values)
    with pytest.raises(DomainError):
        sweep_refresh_cost(tmpl, values)


@settings(max_examples=60, deadline=None)
@given(scenarios, st.floats(0.05, 2.0), st.floats(1.05, 3.0))
def test_sweeps_monotone(scn, start, ratio):
    grid = [start * ratio**i for i in range(8)]
    ts = [p.t_star for _, p in sweep_lambda(scn, grid)]
    assert all(b < a - 1e-12 * a for a, b in zip(ts, ts[1:]))
    ts = [p.t_star for _, p in sweep_refresh_cost(scn, grid)]
    assert all(b > a + 1e-12 * a for a, b in zip(ts, ts[1:]))


def test_compare_cost_functions_examples(linear_scn):
    quad = Scenario(1.0, 2.0, Sum(((1.0, Linear(1)), (1.0, Power(1, 2)))))
    first, second, ordered = compare_cost_functions(linear_scn, quad)
    assert ordered and first.t_star == 2.0
    assert second.t_star == pytest.approx(T_STAR_T_PLUS_T2, rel=1e-11)

    same = compare_cost_functions(linear_scn, linear_scn)
    assert same.first.t_star == same.second.t_star and same.ordered

    double = compare_cost_functions(linear_scn, Scenario(1.0, 2.0, Linear(2)))
    assert double.second.t_star == pytest.approx(math.sqrt(2), rel=1e-15)


def test_compare_cost_functions_preconditions(linear_scn):
    with pytest.raises(DomainError):
        compare_cost_functions(linear_scn, Scenario(2.0, 2.0, Linear(2)))
    with pytest.raises(PreconditionError):
        compare_cost_functions(Scenario(1.0, 2.0, Linear(2)), linear_scn)
    # Delta = 2t - t**2 turns down at t = 1 and negative past t = 2.
    with pytest.raises(PreconditionError):
        compare_cost_functions(
            Scenario(1.0, 2.0, Power(1, 2)), Scenario(1.0, 2.0, Sum(((2.0, Linear(1)),)))
        )


@settings(max_examples=100, deadline=None)
@given(scenarios, st.floats(0.01, 10.0), st.floats(1.0, 3.0))
def test_ordering_property(scn, alpha, q):
    other = scn.replace(age_cost=Sum(((1.0, scn.age_cost), (alpha, Power(1.0, q)))))
    first, second, ordered = compare_cost_functions(scn, other)
    assert ordered
    assert first.t_star >= second.t_star - 1e-9
