from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np

from ctmdp.hjb.grid import TimeGrid, ValueFunction
from ctmdp.hjb.solver import hamiltonian_all, solve_backward
from ctmdp.model.types import GridMismatch, MalformedModel, ModelSpec
from ctmdp.utils.logging_setup import log_event

log = logging.getLogger(__name__)


def _check_value(model: ModelSpec, value: ValueFunction) -> None:
    if value.n_states != model.n_states or not value.grid.matches(model.horizon):
        raise GridMismatch("value function does not live on this model's states and horizon")


def residual(model: ModelSpec, value: ValueFunction) -> float:
    """max over interior nodes of |dV/dt + H(t_n, V(t_n, .))| with central differences."""
    _check_value(model, value)
    ts = value.grid.nodes
    V = value.values
    dt = value.grid.step
    dVdt = (V[2:] - V[:-2]) / (2.0 * dt)
    worst = 0.0
    for k, n in enumerate(range(1, value.grid.N)):
        h = hamiltonian_all(model, ts[n], V[n])[0]
        worst = max(worst, float(np.max(np.abs(dVdt[k] + h))))
    return worst


def time_lipschitz_constant(value: ValueFunction) -> float:
    """max_{n,i} |V(t_{n+1}, i) - V(t_n, i)| / dt."""
    return float(np.max(np.abs(np.diff(value.values, axis=0))) / value.grid.step)


def lipschitz_bound(model: ModelSpec) -> float:
    """3*C1 + 2*M*C2 + T*C0."""
    c = model.costs
    return 3.0 * c.C1 + 2.0 * model.rate_bound * c.C2 + model.horizon * c.C0


@dataclass(frozen=True)
class ComparisonReport:
    interior_sup: float
    terminal_sup: float
    tolerance: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.terminal_sup + self.tolerance - self.interior_sup

    def to_dict(self) -> Dict[str, Any]:
        return {
            "interior_sup": self.interior_sup,
            "terminal_sup": self.terminal_sup,
            "tolerance": self.tolerance,
            "margin": self.margin,
            "passed": self.passed,
        }


def comparison_test(
    model: ModelSpec,
    g1: Sequence[float],
    g2: Sequence[float],
    grid: TimeGrid,
    scheme: str = "explicit_euler",
) -> ComparisonReport:
    """Solve with terminal data g1 and g2 and compare sup(V2 - V1) against sup(g2 - g1)."""
    a = np.asarray(g1, dtype=float)
    b = np.asarray(g2, dtype=float)
    if a.shape != (model.n_states,) or b.shape != (model.n_states,):
        raise MalformedModel("terminal vectors must have one entry per state")
    c2 = float(max(a.max(), b.max(), 0.0))
    m1 = model.with_terminal(a, C2=c2)
    m2 = model.with_terminal(b, C2=c2)
    v1 = solve_backward(m1, grid, scheme)
    v2 = solve_backward(m2, grid, scheme)
    interior = float(np.max(v2.values - v1.values))
    terminal = float(np.max(b - a))
    tol = m1.scheme_tolerance(grid.step)
    report = ComparisonReport(
        interior_sup=interior,
        terminal_sup=terminal,
        tolerance=tol,
        passed=interior <= terminal + tol,
    )
    log_event(log, "hjb.comparison", "Comparison test", **report.to_dict())
    return report
