"""Feynman-Kac Monte Carlo and finite-difference tools for the Kolmogorov backward equation."""

from . import kernels
from .fd import localized_cross_check, residual, solve_dirichlet
from .fk import Estimate, estimate_gradient, estimate_on_grid, estimate_value
from .grid import Box, Field, read_field_csv, write_field_csv
from .problem import ProblemSpec, build_family, load_problem, shift_zeroth_order, validate_assumptions
from .report import BoundCheck, GrowthReport
from .sde import PathBatch, simulate_paths, simulate_with_variation, strong_error
from .spaces import Variant, holder_seminorm, transform_to_bounded, weight, weighted_norm

__version__ = "0.1.0"

__all__ = [
    "BoundCheck",
    "Box",
    "Estimate",
    "Field",
    "GrowthReport",
    "PathBatch",
    "ProblemSpec",
    "Variant",
    "build_family",
    "estimate_gradient",
    "estimate_on_grid",
    "estimate_value",
    "holder_seminorm",
    "kernels",
    "load_problem",
    "localized_cross_check",
    "read_field_csv",
    "residual",
    "shift_zeroth_order",
    "simulate_paths",
    "simulate_with_variation",
    "solve_dirichlet",
    "strong_error",
    "transform_to_bounded",
    "validate_assumptions",
    "weight",
    "weighted_norm",
    "write_field_csv",
]
