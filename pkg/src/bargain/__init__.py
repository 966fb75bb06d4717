"""Cooperative bargaining among gradient-driven agents.

The central solver blends agents' unit descent directions, each weighted
by the distance to that agent's preferred state, which makes the outcome
invariant to strictly increasing transformations of individual cost
scales. Classic product-of-gains and proportional-gain baselines, exact
and comparison-based direction oracles, stationarity certificates, and
two experiment families (formation assignment, Markowitz portfolios) are
included, along with the `bargain` command-line runner.
"""

from .core import (
    BargainError,
    BargainingGame,
    CostModel,
    DimensionMismatch,
    IndividualRationalityViolated,
    InfeasibleState,
    NonFiniteValue,
    PreferredStateError,
    SolveReport,
    StateSpaceSpec,
    StateVector,
    TERM_CONVERGED,
    TERM_MAX_ITERS,
    TERM_STEP_UNDERFLOW,
    make_game,
)
from .oracles import (
    ComparisonVerdict,
    DirectionQueryResult,
    EstimatorConfig,
    compare,
    estimate_direction,
    exact_direction,
    find_preferred_state,
    mix_seed,
)
from .solvers import (
    SolverConfig,
    StepSchedule,
    dibs_step,
    naive_step,
    nbs_step,
    project_simplex,
    solve,
    solve_ksbs,
    step_schedule_value,
)
from .analysis import (
    StationarityCertificate,
    check_bounded,
    finite_diff_gradient,
    ksbs_ratio_spread,
    relative_error,
    stationarity_residual,
)
from .problems import (
    FormationParams,
    LinearCost,
    MonotoneTransform,
    PortfolioProfile,
    PriceSeries,
    QuadraticCost,
    WINDOW_TRADING_DAYS,
    equilibrium_distance,
    estimate_profile,
    formation_cost,
    formation_game,
    load_prices_csv,
    markowitz_cost,
    synthesize_prices,
    toy_game,
    transform_cost,
    transform_game,
)

__version__ = "0.1.0"

__all__ = [
    "BargainError",
    "BargainingGame",
    "ComparisonVerdict",
    "CostModel",
    "DimensionMismatch",
    "DirectionQueryResult",
    "EstimatorConfig",
    "FormationParams",
    "IndividualRationalityViolated",
    "InfeasibleState",
    "LinearCost",
    "MonotoneTransform",
    "NonFiniteValue",
    "PortfolioProfile",
    "PreferredStateError",
    "PriceSeries",
    "QuadraticCost",
    "SolveReport",
    "SolverConfig",
    "StateSpaceSpec",
    "StateVector",
    "StationarityCertificate",
    "StepSchedule",
    "TERM_CONVERGED",
    "TERM_MAX_ITERS",
    "TERM_STEP_UNDERFLOW",
    "WINDOW_TRADING_DAYS",
    "check_bounded",
    "compare",
    "dibs_step",
    "equilibrium_distance",
    "estimate_direction",
    "estimate_profile",
    "exact_direction",
    "find_preferred_state",
    "finite_diff_gradient",
    "formation_cost",
    "formation_game",
    "ksbs_ratio_spread",
    "load_prices_csv",
    "make_game",
    "markowitz_cost",
    "mix_seed",
    "naive_step",
    "nbs_step",
    "project_simplex",
    "relative_error",
    "solve",
    "solve_ksbs",
    "stationarity_residual",
    "step_schedule_value",
    "synthesize_prices",
    "toy_game",
    "transform_cost",
    "transform_game",
]
