"""Problem definitions, expression parsing and assumption checks."""

from .assumptions import AssumptionEntry, AssumptionReport, Profile, validate_assumptions
from .expression import ExpressionDomainError, ExpressionSyntaxError, ExpressionTree, parse_expression
from .families import FAMILIES, build_family
from .fields import CoefficientField
from .io import ProblemFileError, dumps_problem, load_problem, loads_problem, save_problem
from .spec import (
    ProblemSpec,
    corrupt_potential,
    evaluate_coefficients,
    scale_data,
    shift_zeroth_order,
    unshift_factor,
    with_data,
)

__all__ = [
    "AssumptionEntry",
    "AssumptionReport",
    "CoefficientField",
    "ExpressionDomainError",
    "ExpressionSyntaxError",
    "ExpressionTree",
    "FAMILIES",
    "ProblemFileError",
    "ProblemSpec",
    "Profile",
    "build_family",
    "corrupt_potential",
    "dumps_problem",
    "evaluate_coefficients",
    "load_problem",
    "loads_problem",
    "parse_expression",
    "save_problem",
    "scale_data",
    "shift_zeroth_order",
    "unshift_factor",
    "validate_assumptions",
    "with_data",
]
