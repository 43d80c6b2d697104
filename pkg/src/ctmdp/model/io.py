from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ctmdp.model.types import (
    ActionGrid,
    ConstantCost,
    ControlledGenerator,
    CostSpec,
    LinearCost,
    LyapunovSpec,
    MalformedModel,
    ModelSpec,
    RunningCost,
    TableCost,
)


class RunningCostFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "linear", "table"]
    value: float = 0.0
    base: float = 0.0
    state_coef: float = 0.0
    action_coef: Union[float, List[float]] = 0.0
    time_coef: float = 0.0
    times: Optional[List[float]] = None
    values: Optional[List[List[List[float]]]] = None


class LyapunovFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    phi: List[float]
    lambda0: float = Field(gt=0.0)
    kappa0: float = Field(ge=0.0)
    B0: List[int] = Field(default_factory=list)


class BoundsFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    C0: Optional[float] = Field(default=None, ge=0.0)
    C1: Optional[float] = Field(default=None, ge=0.0)
    C2: Optional[float] = Field(default=None, ge=0.0)


class ModelFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_states: int = Field(ge=1)
    horizon: float = Field(gt=0.0)
    action_grid: List[Union[float, List[float]]] = Field(min_length=1)
    rates: List[List[float]]
    bandwidth: Optional[int] = Field(default=None, ge=0)
    running_cost: RunningCostFile
    terminal_cost: List[float]
    lyapunov: Optional[LyapunovFile] = None
    bounds: BoundsFile = Field(default_factory=BoundsFile)


def _running_cost(spec: RunningCostFile, grid: ActionGrid) -> RunningCost:
    if spec.kind == "constant":
        return ConstantCost(spec.value, grid.size)
    if spec.kind == "linear":
        return LinearCost(
            grid,
            base=spec.base,
            state_coef=spec.state_coef,
            action_coef=spec.action_coef,
            time_coef=spec.time_coef,
        )
    if spec.times is None or spec.values is None:
        raise MalformedModel("table running cost needs 'times' and 'values'")
    return TableCost(spec.times, spec.values)


def _derived_bounds(running: RunningCost, terminal: np.ndarray, n_states: int, horizon: float) -> Dict[str, float]:
    """Bounds computed from the data: exact for piecewise-linear-in-t costs."""
    ts = np.unique(np.concatenate([np.linspace(0.0, horizon, 65), running.knots()]))
    ts = ts[(ts >= 0.0) & (ts <= horizon)]
    table = np.stack([np.asarray(running.evaluate(t, np.arange(n_states))) for t in ts])
    c0 = 0.0
    if ts.size > 1:
        c0 = float((np.abs(np.diff(table, axis=0)) / np.diff(ts)[:, None, None]).max())
    return {"C0": c0, "C1": float(max(table.max(), 0.0)), "C2": float(max(terminal.max(), 0.0))}


def model_from_dict(data: Dict[str, Any]) -> ModelSpec:
    try:
        spec = ModelFile.model_validate(data)
    except ValidationError as exc:
        raise MalformedModel(f"invalid model file: {exc}") from exc

    grid = ActionGrid.from_values(spec.action_grid)
    generator = ControlledGenerator.from_triplets(spec.n_states, grid.size, spec.rates, spec.bandwidth)
    running = _running_cost(spec.running_cost, grid)
    terminal = np.asarray(spec.terminal_cost, dtype=float)
    if terminal.size != spec.n_states:
        raise MalformedModel(f"terminal_cost has {terminal.size} entries, expected {spec.n_states}")

    derived = _derived_bounds(running, terminal, spec.n_states, spec.horizon)
    declared = spec.bounds.model_dump()
    bounds = {k: (derived[k] if declared[k] is None else declared[k]) for k in ("C0", "C1", "C2")}
    costs = CostSpec(running=running, terminal=terminal, **bounds)

    lyapunov = None
    if spec.lyapunov is not None:
        lyapunov = LyapunovSpec(
            phi=np.asarray(spec.lyapunov.phi, dtype=float),
            lambda0=spec.lyapunov.lambda0,
            kappa0=spec.lyapunov.kappa0,
            B0=frozenset(spec.lyapunov.B0),
        )
    return ModelSpec(
        n_states=spec.n_states,
        horizon=spec.horizon,
        grid=grid,
        generator=generator,
        costs=costs,
        lyapunov=lyapunov,
    )


def load_model(path: Path) -> ModelSpec:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise MalformedModel(f"cannot parse model file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedModel(f"model file {path} must contain an object")
    return model_from_dict(data)


def model_to_dict(model: ModelSpec) -> Dict[str, Any]:
    c = model.costs
    out: Dict[str, Any] = {
        "n_states": model.n_states,
        "horizon": model.horizon,
        "action_grid": model.grid.to_list(),
        "rates": model.generator.triplets(),
        "bandwidth": model.generator.bandwidth,
        "running_cost": model.costs.running.to_dict(),
        "terminal_cost": [float(x) for x in c.terminal],
        "bounds": {"C0": c.C0, "C1": c.C1, "C2": c.C2},
    }
    if model.lyapunov is not None:
        ly = model.lyapunov
        out["lyapunov"] = {
            "phi": [float(x) for x in ly.phi],
            "lambda0": ly.lambda0,
            "kappa0": ly.kappa0,
            "B0": sorted(ly.B0),
        }
    return out


def save_model(model: ModelSpec, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")
