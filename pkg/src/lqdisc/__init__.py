"""Exact discrete equivalents of sampled linear-quadratic tracking problems.

The library turns a continuous-time linear system with a quadratic
tracking cost and piecewise-constant inputs into its exact discrete
counterpart (transition, input map, cost weights, noise covariance),
solves the resulting finite-horizon problem, and characterizes the
distribution of the stochastic cost both in closed form and by
simulation.
"""

from .butcher import SCHEMES, ButcherTableau, PrecomputedCoefficients, precompute, tableau
from .doubling import DoublingState, discretize_step_doubling
from .errors import (
    ConvexityError,
    DivergenceError,
    LqdiscError,
    ResourceLimitError,
    SingularMatrixError,
    ValidationError,
)
from .expm_method import ExpmBlocks, build_expm_blocks, discretize_expm
from .linalg import LuFactorization, expm, is_psd, solve_linear, symmetrize
from .lqsolve import LqSolution, solve_finite_horizon
from .model import (
    ContinuousLqModel,
    DiscreteLqModel,
    TrackingSpec,
    build_stacked_model,
    continuous_model_from_dict,
    continuous_model_to_dict,
    discrete_model_from_dict,
    discrete_model_to_dict,
    require_valid,
    validate,
)
from .ode_method import discretize_ode
from .oracle import OracleConfig, oracle_cost, oracle_discretize
from .sampling import normal_block
from .stochastic import (
    EmIntervalOps,
    EmReformulation,
    McSummary,
    cost_moments,
    cost_moments_streaming,
    em_interval_ops,
    em_reformulate,
    expected_cost,
    monte_carlo,
    propagate_covariance,
)

__version__ = "0.1.0"

__all__ = [
    "SCHEMES",
    "ButcherTableau",
    "ContinuousLqModel",
    "ConvexityError",
    "DiscreteLqModel",
    "DivergenceError",
    "DoublingState",
    "EmIntervalOps",
    "EmReformulation",
    "ExpmBlocks",
    "LqSolution",
    "LqdiscError",
    "LuFactorization",
    "McSummary",
    "OracleConfig",
    "PrecomputedCoefficients",
    "ResourceLimitError",
    "SingularMatrixError",
    "TrackingSpec",
    "ValidationError",
    "build_expm_blocks",
    "build_stacked_model",
    "continuous_model_from_dict",
    "continuous_model_to_dict",
    "cost_moments",
    "cost_moments_streaming",
    "discrete_model_from_dict",
    "discrete_model_to_dict",
    "discretize_expm",
    "discretize_ode",
    "discretize_step_doubling",
    "em_interval_ops",
    "em_reformulate",
    "expected_cost",
    "expm",
    "is_psd",
    "monte_carlo",
    "normal_block",
    "oracle_cost",
    "oracle_discretize",
    "precompute",
    "propagate_covariance",
    "require_valid",
    "solve_finite_horizon",
    "solve_linear",
    "symmetrize",
    "tableau",
    "validate",
    "__version__",
]
