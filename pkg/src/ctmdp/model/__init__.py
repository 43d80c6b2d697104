"""CTMDP instance: states, action grid, controlled generator, costs, Lyapunov data."""

from ctmdp.model.io import load_model, model_from_dict, model_to_dict, save_model
from ctmdp.model.metrics import (
    control_path_distance,
    generator_matrix,
    rate_lipschitz_constant,
    rate_under_mixture,
    wasserstein1,
)
from ctmdp.model.types import (
    ActionGrid,
    ConstantCost,
    ControlledGenerator,
    CostSpec,
    GridMismatch,
    IndexOutOfRange,
    InvalidMixture,
    LinearCost,
    LyapunovSpec,
    MalformedModel,
    Mixture,
    ModelSpec,
    RunningCost,
    TableCost,
)
from ctmdp.model.validate import AssumptionReport, validate

__all__ = [
    "ActionGrid",
    "AssumptionReport",
    "ConstantCost",
    "ControlledGenerator",
    "CostSpec",
    "GridMismatch",
    "IndexOutOfRange",
    "InvalidMixture",
    "LinearCost",
    "LyapunovSpec",
    "MalformedModel",
    "Mixture",
    "ModelSpec",
    "RunningCost",
    "TableCost",
    "control_path_distance",
    "generator_matrix",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "rate_lipschitz_constant",
    "rate_under_mixture",
    "save_model",
    "validate",
    "wasserstein1",
]
