"""
Fractional Diffusion Monte Carlo

This package contains a Feynman-Kac Monte Carlo solver for space-time
fractional diffusion on bounded domains, with the special functions,
samplers, domains, manufactured problems and convergence harness it needs.
"""

from .errors import (
    AnalysisError,
    ConfigurationError,
    DomainError,
    FrackacError,
    NumericError,
    TrajectoryError,
    UsageError,
)
from .geometry import Ball, Domain, HyperRectangle, LShape, PolarStar, domain_from_spec, hexagonal_hailstone
from .harness import ConvergenceTable, ErrorReport, fit_log_slope, measure_l2_error, sweep
from .problems import (
    ConstantDataProblem,
    Example1,
    Example2,
    Example3,
    Example4,
    FractionalOrders,
    Problem,
    ScaledProblem,
    example1,
    example2,
    example3,
    example4,
    problem_from_spec,
)
from .solver import Estimate, SolverConfig, TrajectoryOutcome, estimate_field, estimate_point, simulate_trajectory
from .stable import RngStream, SubordinatorPath

__all__ = [
    "AnalysisError",
    "Ball",
    "ConfigurationError",
    "ConstantDataProblem",
    "ConvergenceTable",
    "Domain",
    "DomainError",
    "ErrorReport",
    "Estimate",
    "Example1",
    "Example2",
    "Example3",
    "Example4",
    "FractionalOrders",
    "FrackacError",
    "HyperRectangle",
    "LShape",
    "NumericError",
    "PolarStar",
    "Problem",
    "RngStream",
    "ScaledProblem",
    "SolverConfig",
    "SubordinatorPath",
    "TrajectoryError",
    "TrajectoryOutcome",
    "UsageError",
    "domain_from_spec",
    "estimate_field",
    "estimate_point",
    "example1",
    "example2",
    "example3",
    "example4",
    "fit_log_slope",
    "hexagonal_hailstone",
    "measure_l2_error",
    "problem_from_spec",
    "simulate_trajectory",
    "sweep",
]
