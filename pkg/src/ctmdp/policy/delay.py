from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from ctmdp.model.types import PROB_TOL, Mixture
from ctmdp.policy.path import PathSegment, TimeOutOfRange, shift_eval, state_in_history

KINDS = ("markov", "delayed", "multi_delay", "deterministic_curve", "feedback")

RowFactory = Callable[[Tuple[int, ...]], np.ndarray]


class IncompletePolicy(RuntimeError):
    pass


@dataclass(frozen=True)
class DelayParams:
    r0: float = 1.0
    m: int = 0
    s: float = 0.0

    def __post_init__(self) -> None:
        if int(self.m) < 0:
            raise ValueError("number of delays m must be nonnegative")
        if int(self.m) >= 1 and not float(self.r0) > 0.0:
            raise ValueError("delay interval r0 must be positive when m >= 1")
        if float(self.s) < 0.0:
            raise ValueError("start time s must be nonnegative")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "r0", float(self.r0))
        object.__setattr__(self, "s", float(self.s))

    def check(self, horizon: float) -> None:
        if not self.s < horizon:
            raise TimeOutOfRange(f"start time s={self.s!r} must be < T={horizon!r}")


class PolicyTable:
    """
    h(t_n, i0..im) tabulated per state tuple. Rows for a tuple are produced on first
    use by ``row_factory`` as an array of shape (n_nodes, n_actions); a single node
    means the policy does not depend on t.
    """

    def __init__(
        self,
        node_times: Sequence[float],
        n_states: int,
        m: int,
        n_actions: int,
        row_factory: RowFactory,
    ) -> None:
        self.node_times = np.asarray(node_times, dtype=float)
        self.n_states = int(n_states)
        self.m = int(m)
        self.n_actions = int(n_actions)
        self._factory = row_factory
        self._rows: Dict[int, np.ndarray] = {}
        self._lock = threading.Lock()
        self.radix = self.n_states ** np.arange(self.m + 1)

    @property
    def n_nodes(self) -> int:
        return int(self.node_times.size)

    def encode(self, labels: Sequence[int]) -> int:
        return int(np.dot(np.asarray(labels, dtype=np.int64) - 1, self.radix))

    def decode(self, code: int) -> Tuple[int, ...]:
        out = []
        for _ in range(self.m + 1):
            code, r = divmod(code, self.n_states)
            out.append(r + 1)
        return tuple(out)

    def node_index(self, t: Any) -> Any:
        if self.n_nodes == 1:
            return np.zeros(np.shape(t), dtype=int) if np.ndim(t) else 0
        idx = np.clip(np.searchsorted(self.node_times, t, side="right") - 1, 0, self.n_nodes - 1)
        return idx if np.ndim(idx) else int(idx)

    def rows_for(self, code: int) -> np.ndarray:
        rows = self._rows.get(code)
        if rows is not None:
            return rows
        with self._lock:
            rows = self._rows.get(code)
            if rows is None:
                rows = np.array(self._factory(self.decode(code)), dtype=float)
                if rows.ndim == 1:
                    rows = np.broadcast_to(rows, (self.n_nodes, rows.size)).copy()
                if rows.shape != (self.n_nodes, self.n_actions):
                    raise IncompletePolicy(
                        f"policy rows for {self.decode(code)} have shape {rows.shape}, "
                        f"expected {(self.n_nodes, self.n_actions)}"
                    )
                if np.any(rows < 0.0) or np.any(np.abs(rows.sum(axis=1) - 1.0) > PROB_TOL):
                    raise IncompletePolicy(f"policy rows for {self.decode(code)} are not mixtures")
                rows.setflags(write=False)
                self._rows[code] = rows
        return rows

    def lookup(self, node: int, code: int) -> np.ndarray:
        return self.rows_for(code)[node]

    def lookup_many(self, nodes: np.ndarray, codes: np.ndarray) -> np.ndarray:
        """Rows for paired (node, code) arrays; gathers one slice per run of equal codes."""
        out = np.empty((codes.size, self.n_actions))
        if codes.size == 0:
            return out
        cuts = np.flatnonzero(codes[1:] != codes[:-1]) + 1
        starts = np.concatenate(([0], cuts))
        ends = np.concatenate((cuts, [codes.size]))
        for a, b in zip(starts.tolist(), ends.tolist()):
            out[a:b] = self.rows_for(int(codes[a]))[nodes[a:b]]
        return out

    def materialize(self, codes: Sequence[int] | None = None) -> None:
        """Fill rows ahead of parallel use (all tuples when ``codes`` is None)."""
        if codes is None:
            codes = range(self.n_states ** (self.m + 1))
        for c in codes:
            self.rows_for(int(c))

    def materialized(self) -> Dict[int, np.ndarray]:
        with self._lock:
            return dict(self._rows)


@dataclass(frozen=True, eq=False)
class DelayPolicy:
    params: DelayParams
    kind: str
    table: PolicyTable
    horizon: float
    name: str = ""
    source: Optional[Dict[str, Any]] = field(default=None)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.table.m != self.params.m:
            raise ValueError("policy table arity does not match the number of delays m")
        if self.kind in ("markov", "feedback") and self.params.m != 0:
            raise ValueError(f"{self.kind} policies use the current state only (m = 0)")
        self.params.check(self.horizon)

    @property
    def n_actions(self) -> int:
        return self.table.n_actions

    def _check_time(self, t: float) -> None:
        if t < self.params.s - 1e-12 or t > self.horizon + 1e-12:
            raise TimeOutOfRange(f"t={t!r} outside [{self.params.s!r}, {self.horizon!r}]")

    def weights_from_history(self, jump_times: Sequence[float], states: Sequence[int], t: float) -> np.ndarray:
        p = self.params
        labels = [state_in_history(jump_times, states, max(t - k * p.r0, p.s)) for k in range(p.m + 1)]
        return self.table.lookup(self.table.node_index(t), self.table.encode(labels))

    def control_at(self, path: PathSegment, t: float) -> Mixture:
        self._check_time(t)
        p = self.params
        labels = [shift_eval(path, k, p.r0, p.s, t) for k in range(p.m + 1)]
        return Mixture(self.table.lookup(self.table.node_index(t), self.table.encode(labels)))

    def mixtures_along(self, path: PathSegment, times: np.ndarray) -> np.ndarray:
        """Vectorized control_at at many times; shape (len(times), n_actions)."""
        p = self.params
        ts = np.asarray(times, dtype=float)
        codes = np.zeros(ts.size, dtype=np.int64)
        for k in range(p.m + 1):
            labels = path.states_at(np.maximum(ts - k * p.r0, p.s))
            codes += (labels.astype(np.int64) - 1) * int(self.table.radix[k])
        return self.table.lookup_many(np.asarray(self.table.node_index(ts)), codes)


def control_at(policy: DelayPolicy, path: PathSegment, t: float) -> Mixture:
    """mu_t = h(t, theta^0 path(t), ..., theta^m path(t))."""
    return policy.control_at(path, t)


def rebased(policy: DelayPolicy, s: float) -> DelayPolicy:
    """The same h with the history clamp moved to start time ``s``."""
    if policy.params.s == float(s):
        return policy
    params = DelayParams(r0=policy.params.r0, m=policy.params.m, s=float(s))
    return DelayPolicy(params, policy.kind, policy.table, policy.horizon, name=policy.name, source=policy.source)
