from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ctmdp.model.types import GridMismatch

log = logging.getLogger(__name__)

_UNIFORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform nodes 0 = t_0 < ... < t_N = T with N >= 2."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        ts = np.array(self.nodes, dtype=float, copy=True).reshape(-1)
        if ts.size < 3:
            raise GridMismatch("time grid needs N >= 2 steps")
        if ts[0] != 0.0:
            raise GridMismatch("time grid must start at t_0 = 0")
        steps = np.diff(ts)
        if np.any(steps <= 0.0):
            raise GridMismatch("time grid nodes must be increasing")
        if np.any(np.abs(steps - steps.mean()) > _UNIFORM_TOL * max(1.0, ts[-1])):
            raise GridMismatch("time grid must be uniform")
        ts.setflags(write=False)
        object.__setattr__(self, "nodes", ts)

    @classmethod
    def uniform(cls, horizon: float, dt: float) -> "TimeGrid":
        if not (dt > 0.0 and horizon > 0.0):
            raise GridMismatch("horizon and dt must be positive")
        n_steps = max(2, int(math.ceil(horizon / dt - 1e-9)))
        step = horizon / n_steps
        if abs(step - dt) > 1e-12 * max(1.0, horizon):
            log.info("dt=%r does not divide T=%r; using uniform step %r (N=%d)", dt, horizon, step, n_steps)
        nodes = step * np.arange(n_steps + 1, dtype=float)
        nodes[-1] = horizon
        return cls(nodes)

    @property
    def N(self) -> int:
        return int(self.nodes.size - 1)

    @property
    def step(self) -> float:
        return float(self.nodes[-1] / self.N)

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    def node_index(self, t: float | np.ndarray) -> np.ndarray | int:
        """Left node n with t_n <= t (clamped to 0..N)."""
        idx = np.clip(np.searchsorted(self.nodes, t, side="right") - 1, 0, self.N)
        return int(idx) if np.ndim(idx) == 0 else idx

    def matches(self, horizon: float) -> bool:
        return abs(self.horizon - float(horizon)) <= 1e-12 * max(1.0, float(horizon))


@dataclass(frozen=True, eq=False)
class ValueFunction:
    grid: TimeGrid
    values: np.ndarray
    argmin: np.ndarray
    scheme: str = "explicit_euler"

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float, copy=True)
        arg = np.array(self.argmin, dtype=int, copy=True)
        if vals.ndim != 2 or vals.shape[0] != self.grid.N + 1 or arg.shape != vals.shape:
            raise GridMismatch("value table must have shape (N+1, n_states) matching its time grid")
        vals.setflags(write=False)
        arg.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "argmin", arg)

    @property
    def n_states(self) -> int:
        return int(self.values.shape[1])

    def V(self, n: int, i: int) -> float:
        """V(t_n, i) for state label i."""
        return float(self.values[n, i - 1])

    def value_at(self, t: float) -> np.ndarray:
        """Row V(t, .) by linear interpolation between the neighbouring nodes."""
        ts = self.grid.nodes
        if t <= ts[0]:
            return self.values[0].copy()
        if t >= ts[-1]:
            return self.values[-1].copy()
        n = int(np.searchsorted(ts, t, side="right") - 1)
        w = (t - ts[n]) / (ts[n + 1] - ts[n])
        return (1.0 - w) * self.values[n] + w * self.values[n + 1]

    def at_state(self, t: float, i: int) -> float:
        return float(self.value_at(t)[i - 1])
