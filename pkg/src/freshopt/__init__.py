"""Optimal cache refresh intervals under Poisson content updates."""

from .cost_model import (
    AgeCostSpec,
    CostReport,
    Exponential,
    Linear,
    Power,
    Scenario,
    Sum,
    Table,
    age_cost_from_dict,
    eval_age_cost,
    integral_age_cost,
    long_run_cost,
)
from .errors import (
    DomainError,
    FreshoptError,
    InfiniteCostError,
    NoFiniteRootError,
    NumericError,
    PreconditionError,
    SchemaError,
)
from .fleet import (
    FleetMember,
    FleetSpec,
    amortized_connection_comparison,
    averaged_age_cost,
    averaged_refresh_cost,
    averaged_scenario,
    independent_optima,
    uniform_policy,
)
from .numerics import QuadConfig, RootConfig, find_root_increasing, integrate
from .optimizer import (
    Method,
    OptimalPolicy,
    closed_form_linear,
    compare_cost_functions,
    optimal_interval,
    phi,
    sweep_lambda,
    sweep_refresh_cost,
)
from .random_schedule import (
    Degenerate,
    ExponentialInterval,
    GammaInterval,
    IntervalDistribution,
    Uniform,
    compare_random_vs_fixed,
    distribution_from_dict,
    mean,
    random_schedule_cost,
    survival,
)
from .simulator import (
    CycleBatch,
    FixedSchedule,
    RandomSchedule,
    SimConfig,
    SimResult,
    aggregated_age,
    block_rng,
    schedule_from_dict,
    simulate,
    simulate_block,
    simulate_cycle,
)

__version__ = "0.1.0"
