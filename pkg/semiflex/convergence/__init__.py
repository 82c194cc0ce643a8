from .case import (
    QUADRATIC,
    SIN,
    SIN2,
    ConvergenceCase,
    ManufacturedSolution,
    Profile,
    RhoRule,
    parse_rho_rule,
)
from .cases import case_dict, case_names, get_case, manufactured, quadratic
from .harness import ErrorMeasurement, measure_error, measure_ladder, rate_report, solve_case

__all__ = [
    "Profile",
    "SIN",
    "SIN2",
    "QUADRATIC",
    "ManufacturedSolution",
    "RhoRule",
    "ConvergenceCase",
    "parse_rho_rule",
    "manufactured",
    "quadratic",
    "case_dict",
    "case_names",
    "get_case",
    "ErrorMeasurement",
    "solve_case",
    "measure_error",
    "measure_ladder",
    "rate_report",
]
