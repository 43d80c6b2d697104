from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ctmdp.hjb.grid import ValueFunction
from ctmdp.model.types import Mixture, ModelSpec
from ctmdp.policy.builders import policy_rng
from ctmdp.policy.delay import DelayPolicy, rebased
from ctmdp.policy.path import PathSegment, TimeOutOfRange

log = logging.getLogger(__name__)

DEFAULT_QUADRATURE_STEP = 1e-3

_ENVELOPE_TOL = 1e-12
_PATH_STREAM = 1


class InvalidEnvelope(RuntimeError):
    pass


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Stream of path ``index`` under master ``seed``; disjoint from policy streams."""
    return policy_rng(seed, _PATH_STREAM, index)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    One sampled path on [s, T] together with its cost bookkeeping.

    ``mesh`` are the quadrature nodes (jump times and control-refresh instants),
    ``running`` the running cost accumulated up to each node and
    ``control_weights`` the mixture applied on each mesh cell.
    """

    segment: PathSegment
    mesh: np.ndarray
    running: np.ndarray
    control_weights: np.ndarray
    terminal_cost: float
    quadrature_step: float
    pathwise_cost: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pathwise_cost", float(self.running[-1] + self.terminal_cost))

    @property
    def start(self) -> float:
        return self.segment.start

    @property
    def final_state(self) -> int:
        return int(self.segment.states[-1])

    @property
    def applied_controls(self) -> List[Tuple[float, Mixture]]:
        return [(float(t), Mixture(w)) for t, w in zip(self.mesh[:-1], self.control_weights)]


def check_start(model: ModelSpec, s: float, i: int) -> None:
    model.check_state(i)
    if not 0.0 <= s < model.horizon:
        raise TimeOutOfRange(f"start time s={s!r} must lie in [0, T={model.horizon!r})")


def base_mesh(model: ModelSpec, policy: DelayPolicy, s: float, step: float) -> np.ndarray:
    """Refresh grid s, s+h, ..., T merged with the policy's own time nodes and the cost knots."""
    T = model.horizon
    n = max(1, int(np.ceil((T - s) / step - 1e-9)))
    pts = [s + step * np.arange(n, dtype=float), np.array([T])]
    for extra in (policy.table.node_times, model.costs.running.knots()):
        if extra.size > 1:
            pts.append(extra[(extra > s) & (extra < T)])
    return np.unique(np.concatenate(pts))


def _path_mesh(segment: PathSegment, policy: DelayPolicy, grid: np.ndarray, upto: float) -> np.ndarray:
    p = policy.params
    pts = [grid[grid < upto], np.array([upto])]
    if segment.n_jumps:
        jt = segment.jump_times
        pts.append(jt)
        for k in range(1, p.m + 1):
            pts.append(jt + k * p.r0)
    mesh = np.unique(np.concatenate(pts))
    return mesh[(mesh >= segment.start) & (mesh <= upto)]


def _running_cost(
    model: ModelSpec,
    policy: DelayPolicy,
    segment: PathSegment,
    grid: np.ndarray,
    upto: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Composite midpoint rule for int_s^upto f(t, L_t, mu_t) dt."""
    mesh = _path_mesh(segment, policy, grid, upto)
    widths = np.diff(mesh)
    mids = mesh[:-1] + 0.5 * widths
    states = segment.states_at(mids)
    weights = policy.mixtures_along(segment, mids)
    f = model.costs.running.evaluate(mids, states - 1)
    cells = np.einsum("ku,ku->k", f, weights) * widths
    running = np.concatenate(([0.0], np.cumsum(cells)))
    return mesh, running, weights


def _thinning(
    model: ModelSpec,
    policy: DelayPolicy,
    s: float,
    i: int,
    rng: np.random.Generator,
) -> PathSegment:
    T = model.horizon
    M = model.rate_bound
    rates = model.generator.rates
    jumps: List[float] = []
    states: List[int] = [int(i)]
    if M <= 0.0:
        return PathSegment(np.empty(0), np.array(states), s, T)
    t = s
    scale = 1.0 / M
    while True:
        t += rng.exponential(scale)
        if t >= T:
            break
        w = policy.weights_from_history(jumps, states, t)
        row = w @ rates[:, states[-1] - 1, :]
        q = float(row.sum())
        if q > M + _ENVELOPE_TOL * max(1.0, M):
            raise InvalidEnvelope(f"exit rate {q!r} in state {states[-1]} at t={t!r} exceeds the envelope M={M!r}")
        if rng.random() * M >= q:
            continue
        j = int(np.searchsorted(np.cumsum(row), rng.random() * q, side="right"))
        j = min(j, row.size - 1)
        while row[j] <= 0.0:
            j -= 1
        jumps.append(t)
        states.append(j + 1)
    return PathSegment(np.asarray(jumps), np.asarray(states), s, T)


def simulate_path(
    model: ModelSpec,
    policy: DelayPolicy,
    s: float,
    i: int,
    rng: np.random.Generator,
    grid: np.ndarray,
    step: float,
) -> Trajectory:
    segment = _thinning(model, policy, s, i, rng)
    mesh, running, weights = _running_cost(model, policy, segment, grid, model.horizon)
    g = float(model.costs.terminal[segment.states[-1] - 1])
    return Trajectory(segment, mesh, running, weights, g, step)


def sample_path(
    model: ModelSpec,
    policy: DelayPolicy,
    s: float,
    i: int,
    seed: int,
    *,
    index: int = 0,
    quadrature_step: Optional[float] = None,
) -> Trajectory:
    """
    Exact path of the controlled chain by thinning a rate-M Poisson clock.

    At a proposal time t the control mu_t is read from the path so far, the jump
    is accepted with probability q_i(mu_t)/M and the target j is drawn with
    probability q_ij(mu_t)/q_i(mu_t). Path ``index`` of an estimate under ``seed``
    is reproduced exactly.
    """
    s = float(s)
    check_start(model, s, i)
    policy = rebased(policy, s)
    step = float(quadrature_step or DEFAULT_QUADRATURE_STEP)
    grid = base_mesh(model, policy, s, step)
    return simulate_path(model, policy, s, i, path_rng(seed, index), grid, step)


def pathwise_cost(model: ModelSpec, policy: DelayPolicy, traj: Trajectory) -> float:
    """int_s^T f(t, L_t, mu_t) dt + g(L_T), recomputed from the path alone."""
    policy = rebased(policy, traj.start)
    grid = base_mesh(model, policy, traj.start, traj.quadrature_step)
    _, running, _ = _running_cost(model, policy, traj.segment, grid, model.horizon)
    return float(running[-1] + model.costs.terminal[traj.final_state - 1])


def first_jump_time(traj: Trajectory) -> float:
    return float(traj.segment.jump_times[0]) if traj.segment.n_jumps else float("inf")


def stopped_cost(
    model: ModelSpec,
    policy: DelayPolicy,
    traj: Trajectory,
    tau: float,
    value: ValueFunction,
) -> float:
    """int_s^tau f(t, L_t, mu_t) dt + V(tau, L_tau) for a stopping time tau in [s, T]."""
    tau = float(tau)
    if tau < traj.start or tau > model.horizon:
        raise TimeOutOfRange(f"stopping time {tau!r} outside [{traj.start!r}, {model.horizon!r}]")
    policy = rebased(policy, traj.start)
    k = int(np.searchsorted(traj.mesh, tau))
    if k < traj.mesh.size and traj.mesh[k] == tau:
        running = float(traj.running[k])
    else:
        grid = base_mesh(model, policy, traj.start, traj.quadrature_step)
        running = float(_running_cost(model, policy, traj.segment, grid, tau)[1][-1])
    return running + value.at_state(tau, traj.segment.state_at(tau))
