from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np

PROB_TOL = 1e-12


class MalformedModel(ValueError):
    pass


class IndexOutOfRange(IndexError, ValueError):
    pass


class GridMismatch(ValueError):
    pass


class InvalidMixture(ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ActionGrid:
    """Finite grid of action vectors in R^k; rows of ``points`` are the actions."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise MalformedModel("action grid must be a nonempty list of k-vectors")
        if not np.all(np.isfinite(pts)):
            raise MalformedModel("action grid coordinates must be finite")
        if len({tuple(row) for row in pts.tolist()}) != pts.shape[0]:
            raise MalformedModel("action grid points must be pairwise distinct")
        object.__setattr__(self, "points", _frozen(pts))

    @classmethod
    def from_values(cls, values: Iterable[Any]) -> "ActionGrid":
        rows = [[float(x) for x in v] if isinstance(v, (list, tuple, np.ndarray)) else [float(v)] for v in values]
        return cls(np.array(rows, dtype=float))

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def min_gap(self) -> float:
        """Smallest nonzero distance between two grid points (inf for a single point)."""
        if self.size < 2:
            return float("inf")
        diff = self.points[:, None, :] - self.points[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        return float(dist[dist > 0].min())

    def to_list(self) -> List[Any]:
        if self.dim == 1:
            return [float(x) for x in self.points[:, 0]]
        return [[float(x) for x in row] for row in self.points]


@dataclass(frozen=True, eq=False)
class Mixture:
    """Probability measure on the action grid (one weight per grid point)."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise InvalidMixture("mixture needs at least one weight")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise InvalidMixture("mixture weights must be finite and nonnegative")
        if abs(float(w.sum()) - 1.0) > PROB_TOL:
            raise InvalidMixture(f"mixture weights sum to {float(w.sum())!r}, expected 1")
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def dirac(cls, index: int, size: int) -> "Mixture":
        if not 0 <= index < size:
            raise IndexOutOfRange(f"action index {index} outside 0..{size - 1}")
        w = np.zeros(size)
        w[index] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, size: int) -> "Mixture":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def normalized(cls, raw: Sequence[float]) -> "Mixture":
        w = np.asarray(raw, dtype=float)
        return cls(w / w.sum())

    def __len__(self) -> int:
        return int(self.weights.size)

    def blend(self, other: "Mixture", lam: float) -> "Mixture":
        """Convex combination lam*self + (1-lam)*other."""
        return Mixture.normalized(lam * self.weights + (1.0 - lam) * other.weights)

    def same_as(self, other: "Mixture", tol: float = 0.0) -> bool:
        return len(self) == len(other) and bool(np.all(np.abs(self.weights - other.weights) <= tol))


@dataclass(frozen=True, eq=False)
class ControlledGenerator:
    """
    Action-level transition rates ``rates[u, i, j]`` (0-based, i != j).

    The diagonal is never taken from the input: ``full[u, i, i] = -sum_{j != i} rates[u, i, j]``
    so every row of every ``full[u]`` sums to zero exactly as stored.
    """

    rates: np.ndarray
    bandwidth: int
    full: np.ndarray = field(init=False, repr=False)
    exit_rates: np.ndarray = field(init=False, repr=False)
    rate_bound: float = field(init=False)

    def __post_init__(self) -> None:
        r = np.array(self.rates, dtype=float, copy=True)
        if r.ndim != 3 or r.shape[1] != r.shape[2]:
            raise MalformedModel("rates must have shape (n_actions, n_states, n_states)")
        if not np.all(np.isfinite(r)):
            raise MalformedModel("rates must be finite")
        if np.any(r < 0.0):
            raise MalformedModel("transition rates must be nonnegative")
        if int(self.bandwidth) < 0:
            raise MalformedModel("bandwidth K must be nonnegative")
        n = r.shape[1]
        r[:, np.arange(n), np.arange(n)] = 0.0
        exit_rates = r.sum(axis=2)
        full = r.copy()
        full[:, np.arange(n), np.arange(n)] = -exit_rates
        object.__setattr__(self, "rates", _frozen(r))
        object.__setattr__(self, "bandwidth", int(self.bandwidth))
        object.__setattr__(self, "full", _frozen(full))
        object.__setattr__(self, "exit_rates", _frozen(exit_rates))
        object.__setattr__(self, "rate_bound", float(exit_rates.max()) if exit_rates.size else 0.0)

    @classmethod
    def from_triplets(
        cls,
        n_states: int,
        n_actions: int,
        triplets: Iterable[Sequence[float]],
        bandwidth: Optional[int] = None,
    ) -> "ControlledGenerator":
        """Build from sparse ``[i, j, u_index, value]`` entries (states 1-based)."""
        rates = np.zeros((n_actions, n_states, n_states))
        seen: set[tuple[int, int, int]] = set()
        diagonal: list[tuple[int, int, float]] = []
        for entry in triplets:
            if len(entry) != 4:
                raise MalformedModel(f"rate entry {list(entry)!r} must be [i, j, u_index, value]")
            i, j, u = int(entry[0]), int(entry[1]), int(entry[2])
            value = float(entry[3])
            if not (1 <= i <= n_states and 1 <= j <= n_states):
                raise MalformedModel(f"rate entry state index out of range 1..{n_states}: {list(entry)!r}")
            if not 0 <= u < n_actions:
                raise MalformedModel(f"rate entry action index out of range 0..{n_actions - 1}: {list(entry)!r}")
            if (i, j, u) in seen:
                raise MalformedModel(f"duplicate rate entry for (i={i}, j={j}, u={u})")
            seen.add((i, j, u))
            if i == j:
                diagonal.append((i, u, value))
                continue
            if value < 0.0:
                raise MalformedModel(f"negative rate q_{i}{j}(u{u}) = {value}")
            rates[u, i - 1, j - 1] = value
        for i, u, value in diagonal:
            expected = -rates[u, i - 1].sum()
            if abs(value - expected) > PROB_TOL:
                raise MalformedModel(
                    f"row sum inconsistent for state {i}, action {u}: diagonal {value} != {expected}"
                )
        if bandwidth is None:
            bandwidth = observed_bandwidth(rates)
        return cls(rates, int(bandwidth))

    @property
    def n_states(self) -> int:
        return int(self.rates.shape[1])

    @property
    def n_actions(self) -> int:
        return int(self.rates.shape[0])

    def triplets(self) -> List[List[float]]:
        u_idx, i_idx, j_idx = np.nonzero(self.rates)
        rows = sorted(zip(i_idx.tolist(), j_idx.tolist(), u_idx.tolist()))
        return [[i + 1, j + 1, u, float(self.rates[u, i, j])] for i, j, u in rows]


def observed_bandwidth(rates: np.ndarray) -> int:
    """Largest |j - i| carrying a nonzero rate (0 for a rate-free generator)."""
    _, i_idx, j_idx = np.nonzero(np.asarray(rates))
    if i_idx.size == 0:
        return 0
    return int(np.abs(j_idx - i_idx).max())


class RunningCost:
    """
    Running cost f(t, i, u). ``evaluate`` is vectorized: ``t`` and the 0-based
    state index array broadcast together and an action axis is appended.
    """

    kind = "abstract"

    def evaluate(self, t: Any, idx: Any) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def knots(self) -> np.ndarray:
        """Times where f may change slope (used when sampling bounds)."""
        return np.empty(0)

    def to_dict(self) -> Dict[str, Any]:  # pragma: no cover - interface
        raise NotImplementedError


class ConstantCost(RunningCost):
    kind = "constant"

    def __init__(self, value: float, n_actions: int) -> None:
        self.value = float(value)
        self.n_actions = int(n_actions)

    def evaluate(self, t: Any, idx: Any) -> np.ndarray:
        shape = np.broadcast(np.asarray(t), np.asarray(idx)).shape
        return np.full(shape + (self.n_actions,), self.value)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "value": self.value}


class LinearCost(RunningCost):
    """f = base + state_coef*(i-1) + sum_k action_coef[k]*u_k + time_coef*t."""

    kind = "linear"

    def __init__(
        self,
        grid: ActionGrid,
        *,
        base: float = 0.0,
        state_coef: float = 0.0,
        action_coef: Sequence[float] | float = 0.0,
        time_coef: float = 0.0,
    ) -> None:
        coef = np.atleast_1d(np.asarray(action_coef, dtype=float))
        if coef.size == 1 and grid.dim > 1:
            coef = np.full(grid.dim, float(coef[0]))
        if coef.size != grid.dim:
            raise MalformedModel(f"linear cost action_coef needs {grid.dim} entries, got {coef.size}")
        self.base = float(base)
        self.state_coef = float(state_coef)
        self.action_coef = coef
        self.time_coef = float(time_coef)
        self._action_term = grid.points @ coef

    def evaluate(self, t: Any, idx: Any) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)
        i_arr = np.asarray(idx, dtype=float)
        scalar = self.base + self.state_coef * i_arr + self.time_coef * t_arr
        return scalar[..., None] + self._action_term

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "base": self.base,
            "state_coef": self.state_coef,
            "action_coef": [float(x) for x in self.action_coef],
            "time_coef": self.time_coef,
        }


class TableCost(RunningCost):
    """Dense table ``values[t_k, i, u]`` on declared times; linear in t between them."""

    kind = "table"

    def __init__(self, times: Sequence[float], values: Any) -> None:
        ts = np.asarray(times, dtype=float)
        vals = np.asarray(values, dtype=float)
        if ts.ndim != 1 or ts.size == 0 or np.any(np.diff(ts) <= 0):
            raise MalformedModel("table cost times must be a nonempty increasing list")
        if vals.ndim != 3 or vals.shape[0] != ts.size:
            raise MalformedModel("table cost values must have shape (n_times, n_states, n_actions)")
        self.times = _frozen(ts)
        self.values = _frozen(vals)

    def evaluate(self, t: Any, idx: Any) -> np.ndarray:
        t_arr, i_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(idx, dtype=int))
        if self.times.size == 1:
            return self.values[0][i_arr]
        k = np.clip(np.searchsorted(self.times, t_arr, side="right") - 1, 0, self.times.size - 2)
        t0 = self.times[k]
        t1 = self.times[k + 1]
        w = np.clip((t_arr - t0) / (t1 - t0), 0.0, 1.0)[..., None]
        return (1.0 - w) * self.values[k, i_arr] + w * self.values[k + 1, i_arr]

    def knots(self) -> np.ndarray:
        return self.times

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "times": self.times.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class CostSpec:
    running: RunningCost
    terminal: np.ndarray
    C0: float
    C1: float
    C2: float

    def __post_init__(self) -> None:
        g = np.asarray(self.terminal, dtype=float).reshape(-1)
        if not np.all(np.isfinite(g)) or np.any(g < 0.0):
            raise MalformedModel("terminal cost must be finite and nonnegative")
        for name in ("C0", "C1", "C2"):
            val = float(getattr(self, name))
            if not np.isfinite(val) or val < 0.0:
                raise MalformedModel(f"cost bound {name} must be a finite nonnegative real")
            object.__setattr__(self, name, val)
        object.__setattr__(self, "terminal", _frozen(g))

    def f(self, t: float, i: int, u: int) -> float:
        """Running cost at (t, state label i, action index u)."""
        return float(self.running.evaluate(t, i - 1)[u])

    def g(self, i: int) -> float:
        return float(self.terminal[i - 1])


@dataclass(frozen=True, eq=False)
class LyapunovSpec:
    phi: np.ndarray
    lambda0: float
    kappa0: float
    B0: FrozenSet[int]

    def __post_init__(self) -> None:
        phi = np.asarray(self.phi, dtype=float).reshape(-1)
        if not np.all(np.isfinite(phi)) or np.any(phi < 1.0):
            raise MalformedModel("Lyapunov function phi must be finite and >= 1")
        if not float(self.lambda0) > 0.0:
            raise MalformedModel("lambda0 must be positive")
        if not float(self.kappa0) >= 0.0:
            raise MalformedModel("kappa0 must be nonnegative")
        object.__setattr__(self, "phi", _frozen(phi))
        object.__setattr__(self, "lambda0", float(self.lambda0))
        object.__setattr__(self, "kappa0", float(self.kappa0))
        object.__setattr__(self, "B0", frozenset(int(b) for b in self.B0))

    def indicator(self, n_states: int) -> np.ndarray:
        ind = np.zeros(n_states)
        for b in self.B0:
            ind[b - 1] = 1.0
        return ind

    def moment_bound(self, i: int, t: float, horizon: float) -> float:
        """(Phi(i) + kappa0*T) * exp(lambda0*t)."""
        return float((self.phi[i - 1] + self.kappa0 * horizon) * np.exp(self.lambda0 * t))


@dataclass(frozen=True, eq=False)
class ModelSpec:
    n_states: int
    horizon: float
    grid: ActionGrid
    generator: ControlledGenerator
    costs: CostSpec
    lyapunov: Optional[LyapunovSpec] = None

    def __post_init__(self) -> None:
        if int(self.n_states) < 1:
            raise MalformedModel("n_states must be a positive integer")
        if not (np.isfinite(self.horizon) and float(self.horizon) > 0.0):
            raise MalformedModel("horizon T must be a positive real")
        object.__setattr__(self, "n_states", int(self.n_states))
        object.__setattr__(self, "horizon", float(self.horizon))
        if self.generator.n_states != self.n_states:
            raise MalformedModel(
                f"generator covers {self.generator.n_states} states, model declares {self.n_states}"
            )
        if self.generator.n_actions != self.grid.size:
            raise MalformedModel(
                f"generator has {self.generator.n_actions} actions, action grid has {self.grid.size}"
            )
        if self.costs.terminal.size != self.n_states:
            raise MalformedModel("terminal cost must have one entry per state")
        sample = np.asarray(self.costs.running.evaluate(0.0, np.arange(self.n_states)))
        if sample.shape != (self.n_states, self.grid.size):
            raise MalformedModel(
                f"running cost evaluates to shape {sample.shape}, expected {(self.n_states, self.grid.size)}"
            )
        if self.lyapunov is not None:
            if self.lyapunov.phi.size != self.n_states:
                raise MalformedModel("Lyapunov phi must have one entry per state")
            if any(not 1 <= b <= self.n_states for b in self.lyapunov.B0):
                raise MalformedModel("Lyapunov set B0 contains a state outside 1..n_states")

    @property
    def n_actions(self) -> int:
        return self.grid.size

    @property
    def rate_bound(self) -> float:
        return self.generator.rate_bound

    def check_state(self, i: int) -> int:
        if not 1 <= int(i) <= self.n_states:
            raise IndexOutOfRange(f"state {i} outside 1..{self.n_states}")
        return int(i)

    def running_table(self, t: float) -> np.ndarray:
        """f(t, i, u) for all states and actions, shape (n_states, n_actions)."""
        return np.asarray(self.costs.running.evaluate(float(t), np.arange(self.n_states)))

    def with_terminal(self, terminal: Sequence[float], *, C2: Optional[float] = None) -> "ModelSpec":
        g = np.asarray(terminal, dtype=float)
        bound = float(g.max()) if C2 is None else float(C2)
        costs = dataclasses.replace(self.costs, terminal=g, C2=max(bound, 0.0))
        return dataclasses.replace(self, costs=costs)

    def scheme_tolerance(self, dt: float) -> float:
        """10*dt*(C1 + M*(C2 + C1*T)); first-order scheme error with a safety factor."""
        c = self.costs
        return 10.0 * float(dt) * (c.C1 + self.rate_bound * (c.C2 + c.C1 * self.horizon))
