import random

import pytest
from hypothesis import strategies as st

from freshopt import Exponential, Linear, Power, Scenario, Table

positive = st.floats(min_value=0.05, max_value=20.0, allow_nan=False)


@st.composite
def tables(draw, max_points=6):
    n = draw(st.integers(min_value=2, max_value=max_points))
    dts = draw(st.lists(st.floats(0.05, 5.0), min_size=n - 1, max_size=n - 1))
    dcs = draw(st.lists(st.floats(0.05, 5.0), min_size=n - 1, max_size=n - 1))
    c0 = draw(st.floats(0.0, 2.0))
    pts, t, c = [(0.0, c0)], 0.0, c0
    for dt, dc in zip(dts, dcs):
        t, c = t + dt, c + dc
        pts.append((t, c))
    return Table(tuple(pts))


def age_costs(max_rate=0.5):
    return st.one_of(
        st.builds(Linear, positive),
        st.builds(Power, positive, st.floats(0.2, 4.0)),
        st.builds(Exponential, positive, st.floats(0.05, max_rate)),
        tables(),
    )


scenarios = st.builds(Scenario, st.floats(0.1, 10.0), st.floats(0.1, 10.0), age_costs())


def random_spec(rng: random.Random):
    """Plain-random counterpart of ``age_costs`` for fixed-count loops."""
    kind = rng.randrange(4)
    if kind == 0:
        return Linear(rng.uniform(0.1, 10.0))
    if kind == 1:
        return Power(rng.uniform(0.1, 5.0), rng.uniform(0.3, 3.0))
    if kind == 2:
        return Exponential(rng.uniform(0.1, 5.0), rng.uniform(0.05, 1.0))
    pts, t, c = [(0.0, rng.uniform(0.0, 1.0))], 0.0, None
    c = pts[0][1]
    for _ in range(rng.randrange(1, 5)):
        t += rng.uniform(0.1, 3.0)
        c += rng.uniform(0.1, 3.0)
        pts.append((t, c))
    return Table(tuple(pts))


def random_scenario(rng: random.Random) -> Scenario:
    return Scenario(rng.uniform(0.1, 10.0), rng.uniform(0.1, 10.0), random_spec(rng))


@pytest.fixture
def linear_scn():
    return Scenario(1.0, 2.0, Linear(1.0))
