"""End-to-end bound checks, the verification suite and the command line."""

from .checks import (
    Mode,
    bernstein_functional,
    calibrate,
    check_growth,
    check_max_principle,
    check_schauder_ratio,
    check_smoothing,
    localized_cross_check,
    localized_field,
    schauder_ratio,
    transform_cross_check,
)
from .suite import SuiteResult, run_suite

__all__ = [
    "Mode",
    "SuiteResult",
    "bernstein_functional",
    "calibrate",
    "check_growth",
    "check_max_principle",
    "check_schauder_ratio",
    "check_smoothing",
    "localized_cross_check",
    "localized_field",
    "run_suite",
    "schauder_ratio",
    "transform_cross_check",
]
