"""Cross-checks between solver, simulator and exact oracles; structural experiments."""

from ctmdp.verify.experiments import (
    child_seed,
    comparison_suite,
    delay_no_gain,
    dpp_check,
    lipschitz_check,
    oracle_sandwich,
    random_instance,
    tightness_check,
)
from ctmdp.verify.oracle import (
    ComplexityBudgetExceeded,
    brute_force_value,
    closed_form_two_state,
    transient_expm,
    transient_uniformized,
    two_state_model,
)
from ctmdp.verify.report import ExperimentReport, reports_payload, write_report

__all__ = [
    "ComplexityBudgetExceeded",
    "ExperimentReport",
    "brute_force_value",
    "child_seed",
    "closed_form_two_state",
    "comparison_suite",
    "delay_no_gain",
    "dpp_check",
    "lipschitz_check",
    "oracle_sandwich",
    "random_instance",
    "reports_payload",
    "tightness_check",
    "transient_expm",
    "transient_uniformized",
    "two_state_model",
    "write_report",
]
