"""Backward HJB solver for the finite-horizon CTMDP and its residual checks."""

from ctmdp.hjb.checks import (
    ComparisonReport,
    comparison_test,
    lipschitz_bound,
    residual,
    time_lipschitz_constant,
)
from ctmdp.hjb.export import FLOAT_FORMAT, value_frame, write_frame, write_value_csv
from ctmdp.hjb.grid import TimeGrid, ValueFunction
from ctmdp.hjb.solver import (
    NonFiniteValue,
    StabilityViolation,
    hamiltonian,
    hamiltonian_all,
    normalize_scheme,
    solve_backward,
)

__all__ = [
    "ComparisonReport",
    "FLOAT_FORMAT",
    "NonFiniteValue",
    "StabilityViolation",
    "TimeGrid",
    "ValueFunction",
    "comparison_test",
    "hamiltonian",
    "hamiltonian_all",
    "lipschitz_bound",
    "normalize_scheme",
    "residual",
    "solve_backward",
    "time_lipschitz_constant",
    "value_frame",
    "write_frame",
    "write_value_csv",
]
