from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ctmdp.model.types import ModelSpec
from ctmdp.policy.delay import DelayPolicy, rebased
from ctmdp.policy.path import TimeOutOfRange
from ctmdp.simulate.sampler import (
    DEFAULT_QUADRATURE_STEP,
    Trajectory,
    base_mesh,
    check_start,
    path_rng,
    simulate_path,
)
from ctmdp.utils.logging_setup import log_event
from ctmdp.utils.workers import map_indexed

log = logging.getLogger(__name__)

Functional = Callable[[Trajectory], Any]


class MissingLyapunov(ValueError):
    pass


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_paths: int
    seed: int

    @classmethod
    def from_samples(cls, samples: Sequence[float], seed: int) -> "McEstimate":
        x = np.asarray(samples, dtype=float)
        if x.size < 2:
            raise ValueError("a Monte Carlo estimate needs at least 2 samples")
        return cls(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), int(x.size), int(seed))

    def to_dict(self) -> Dict[str, Any]:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n_paths, "seed": self.seed}


def _check_n(n_paths: int) -> int:
    if int(n_paths) < 2:
        raise ValueError(f"n_paths must be >= 2, got {n_paths}")
    return int(n_paths)


def estimate_functional(
    model: ModelSpec,
    policy: DelayPolicy,
    s: float,
    i: int,
    n_paths: int,
    seed: int,
    functional: Functional,
    *,
    quadrature_step: Optional[float] = None,
    workers: Optional[int] = None,
) -> np.ndarray:
    """
    Sample ``n_paths`` trajectories from (s, i) and return ``functional`` of each,
    stacked in path order. Path k always uses stream (seed, k), so the result does
    not depend on how paths are spread over workers.
    """
    s = float(s)
    n_paths = _check_n(n_paths)
    check_start(model, s, i)
    policy = rebased(policy, s)
    step = float(quadrature_step or DEFAULT_QUADRATURE_STEP)
    grid = base_mesh(model, policy, s, step)

    def block(lo: int, hi: int) -> List[Any]:
        return [functional(simulate_path(model, policy, s, i, path_rng(seed, k), grid, step)) for k in range(lo, hi)]

    values = np.asarray(map_indexed(block, n_paths, workers=workers), dtype=float)
    log.debug("estimate_functional: policy=%s s=%r i=%d n=%d seed=%d", policy.name, s, i, n_paths, seed)
    return values


def estimate_J(
    model: ModelSpec,
    policy: DelayPolicy,
    s: float,
    i: int,
    n_paths: int,
    seed: int,
    *,
    quadrature_step: Optional[float] = None,
    workers: Optional[int] = None,
) -> McEstimate:
    """Monte Carlo J(s, i, policy) = E[int_s^T f dt + g(L_T)]."""
    costs = estimate_functional(
        model, policy, s, i, n_paths, seed, lambda tr: tr.pathwise_cost,
        quadrature_step=quadrature_step, workers=workers,
    )
    est = McEstimate.from_samples(costs, seed)
    log_event(
        log,
        "simulate.estimate",
        "MC estimate done",
        policy=policy.name,
        s=s,
        i=int(i),
        mean=est.mean,
        stderr=est.stderr,
        n=est.n_paths,
        seed=int(seed),
    )
    return est


@dataclass(frozen=True)
class TracePoint:
    t: float
    estimate: McEstimate
    bound: float

    @property
    def margin(self) -> float:
        """bound + 3 stderr - mean; nonnegative when the moment bound holds."""
        return self.bound + 3.0 * self.estimate.stderr - self.estimate.mean

    @property
    def holds(self) -> bool:
        return self.margin >= 0.0


def _check_times(model: ModelSpec, s: float, times: Sequence[float]) -> np.ndarray:
    ts = np.asarray(times, dtype=float).reshape(-1)
    if ts.size == 0:
        raise ValueError("at least one checkpoint is required")
    if np.any(ts < s) or np.any(ts > model.horizon):
        raise TimeOutOfRange(f"checkpoints must lie in [{s!r}, {model.horizon!r}]")
    return ts


def lyapunov_trace(
    model: ModelSpec,
    policy: DelayPolicy,
    s: float,
    i: int,
    n_paths: int,
    seed: int,
    checkpoints: Sequence[float],
    *,
    workers: Optional[int] = None,
) -> List[TracePoint]:
    """MC mean of Phi(L_t) at each checkpoint, paired with (Phi(i) + kappa0 T) e^{lambda0 t}."""
    ly = model.lyapunov
    if ly is None:
        raise MissingLyapunov("model declares no Lyapunov function")
    ts = _check_times(model, float(s), checkpoints)
    phi = ly.phi
    samples = estimate_functional(
        model, policy, s, i, n_paths, seed, lambda tr: phi[tr.segment.states_at(ts) - 1], workers=workers
    )
    return [
        TracePoint(float(t), McEstimate.from_samples(samples[:, k], seed), ly.moment_bound(i, float(t), model.horizon))
        for k, t in enumerate(ts)
    ]


@dataclass(frozen=True)
class WindowFrequency:
    start: float
    delta: float
    estimate: McEstimate
    bound: float

    @property
    def margin(self) -> float:
        return self.bound + 3.0 * self.estimate.stderr - self.estimate.mean

    @property
    def holds(self) -> bool:
        return self.margin >= 0.0


def jump_window_frequency(
    model: ModelSpec,
    policy: DelayPolicy,
    s: float,
    i: int,
    delta: float,
    window_starts: Sequence[float],
    n_paths: int,
    seed: int,
    *,
    workers: Optional[int] = None,
) -> List[WindowFrequency]:
    """Empirical P(at least one jump in (t, t + delta]) per window against 1 - e^{-M delta}."""
    if not delta > 0.0:
        raise ValueError("window width delta must be positive")
    starts = _check_times(model, float(s), window_starts)
    if np.any(starts + delta > model.horizon + 1e-12):
        raise TimeOutOfRange("every window must end by T")
    ends = starts + delta

    def hits(tr: Trajectory) -> np.ndarray:
        jt = tr.segment.jump_times
        return (np.searchsorted(jt, starts, side="right") < np.searchsorted(jt, ends, side="right")).astype(float)

    samples = estimate_functional(model, policy, s, i, n_paths, seed, hits, workers=workers)
    bound = float(-np.expm1(-model.rate_bound * delta))
    return [
        WindowFrequency(float(t), float(delta), McEstimate.from_samples(samples[:, k], seed), bound)
        for k, t in enumerate(starts)
    ]


def trajectory_frame(trajs: Sequence[Trajectory]) -> pd.DataFrame:
    """Rows ``path_id, t, state, event, cost_so_far``; cost_so_far is the running cost accrued by t."""
    frames = []
    for path_id, tr in enumerate(trajs):
        jumps = set(tr.segment.jump_times.tolist())
        frames.append(
            pd.DataFrame(
                {
                    "path_id": path_id,
                    "t": tr.mesh,
                    "state": tr.segment.states_at(tr.mesh),
                    "event": ["jump" if t in jumps else "refresh" for t in tr.mesh.tolist()],
                    "cost_so_far": tr.running,
                }
            )
        )
    if not frames:
        return pd.DataFrame(columns=["path_id", "t", "state", "event", "cost_so_far"])
    return pd.concat(frames, ignore_index=True)
