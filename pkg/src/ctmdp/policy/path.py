from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_TIME_EPS = 1e-12


class TimeOutOfRange(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PathSegment:
    """
    Right-continuous step path on [start, end]: the state on
    [jump_times[k-1], jump_times[k]) is states[k] (states[0] before the first jump).
    """

    jump_times: np.ndarray
    states: np.ndarray
    start: float = 0.0
    end: float = float("inf")

    def __post_init__(self) -> None:
        jt = np.array(self.jump_times, dtype=float, copy=True).reshape(-1)
        st = np.array(self.states, dtype=int, copy=True).reshape(-1)
        if st.size != jt.size + 1:
            raise ValueError("a path needs exactly one more state than jump times")
        if jt.size:
            if np.any(np.diff(jt) <= 0.0):
                raise ValueError("jump times must be strictly increasing")
            if jt[0] < self.start or jt[-1] > self.end:
                raise ValueError("jump times must lie within [start, end]")
            if np.any(st[1:] == st[:-1]):
                raise ValueError("consecutive states of a path must differ")
        jt.setflags(write=False)
        st.setflags(write=False)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "states", st)
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "end", float(self.end))

    @classmethod
    def constant(cls, state: int, start: float = 0.0, end: float = float("inf")) -> "PathSegment":
        return cls(np.empty(0), np.array([state]), start, end)

    @property
    def start_state(self) -> int:
        return int(self.states[0])

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    def state_at(self, x: float) -> int:
        return int(self.states[int(np.searchsorted(self.jump_times, x, side="right"))])

    def states_at(self, xs: np.ndarray) -> np.ndarray:
        return self.states[np.searchsorted(self.jump_times, xs, side="right")]


def state_in_history(jump_times: Sequence[float], states: Sequence[int], x: float) -> int:
    """Step-function lookup on plain lists (used while a path is still growing)."""
    return int(states[bisect_right(jump_times, x)])


def shift_eval(path: PathSegment, k: int, r0: float, s: float, t: float) -> int:
    """theta^k_{s,r0} path (t) = path((t - k*r0) v s)."""
    if k < 0:
        raise ValueError("shift order k must be nonnegative")
    if k > 0 and not r0 > 0.0:
        raise ValueError("delay interval r0 must be positive")
    if t < s - _TIME_EPS or t > path.end + _TIME_EPS:
        raise TimeOutOfRange(f"t={t!r} outside [{s!r}, {path.end!r}]")
    return path.state_at(max(t - k * r0, s))
