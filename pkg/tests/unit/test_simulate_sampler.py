from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np
import pytest

from ctmdp.cli.demo import demo_model
from ctmdp.hjb import TimeGrid, solve_backward
from ctmdp.model import ConstantCost, CostSpec, IndexOutOfRange, LinearCost, ModelSpec
from ctmdp.policy import DelayParams, DelayPolicy, TimeOutOfRange, random_delay_policy, uniform_policy
from ctmdp.simulate import (
    InvalidEnvelope,
    first_jump_time,
    pathwise_cost,
    sample_path,
    stopped_cost,
)
from ctmdp.verify import two_state_model


def _with_running(model: ModelSpec, running, C0: float, C1: float, terminal: Sequence[float] = (0.0, 0.0)) -> ModelSpec:
    g = np.asarray(terminal, dtype=float)
    costs = CostSpec(running=running, terminal=g, C0=C0, C1=C1, C2=float(g.max()))
    return dataclasses.replace(model, costs=costs)


class _InflatedPolicy(DelayPolicy):
    def weights_from_history(self, jump_times, states, t):
        return np.array([3.0])


def test_zero_rates_give_constant_path() -> None:
    model = two_state_model(rate=0.0, terminal=(0.3, 1.0))
    traj = sample_path(model, uniform_policy(model), 0.0, 1, seed=1)
    assert traj.segment.n_jumps == 0
    assert traj.final_state == 1
    assert traj.pathwise_cost == 0.3
    assert first_jump_time(traj) == float("inf")


def test_constant_running_cost_integrates_exactly() -> None:
    model = _with_running(two_state_model(rate=3.0), ConstantCost(0.7, 1), 0.0, 0.7)
    policy = uniform_policy(model)
    for seed in range(5):
        traj = sample_path(model, policy, 0.25, 1, seed=seed)
        assert abs(traj.pathwise_cost - 0.7 * 0.75) <= 1e-12


def test_time_linear_cost_integrates_exactly() -> None:
    base = two_state_model(rate=2.0)
    model = _with_running(base, LinearCost(base.grid, time_coef=1.0), 1.0, 1.0)
    traj = sample_path(model, uniform_policy(model), 0.0, 2, seed=3)
    assert abs(traj.pathwise_cost - 0.5) <= 1e-12


def test_zero_running_cost_leaves_terminal_cost() -> None:
    model = two_state_model(rate=2.0, terminal=(0.25, 1.5))
    for seed in range(5):
        traj = sample_path(model, uniform_policy(model), 0.0, 1, seed=seed)
        assert traj.pathwise_cost == model.costs.g(traj.final_state)


def test_paths_are_reproducible_per_index() -> None:
    model = two_state_model(rate=5.0)
    policy = uniform_policy(model)
    a = sample_path(model, policy, 0.0, 1, seed=5, index=3)
    b = sample_path(model, policy, 0.0, 1, seed=5, index=3)
    c = sample_path(model, policy, 0.0, 1, seed=5, index=4)
    np.testing.assert_array_equal(a.segment.jump_times, b.segment.jump_times)
    np.testing.assert_array_equal(a.segment.states, b.segment.states)
    assert not np.array_equal(a.segment.jump_times, c.segment.jump_times)


def test_demo_paths_respect_bandwidth() -> None:
    model = demo_model()
    policy = random_delay_policy(model, DelayParams(r0=0.1, m=1), seed=2)
    for index in range(20):
        traj = sample_path(model, policy, 0.0, 5, seed=9, index=index)
        states = traj.segment.states
        assert np.all(np.abs(np.diff(states)) == 1)
        assert states.min() >= 1 and states.max() <= 10
        assert np.all(traj.segment.jump_times < 1.0)


def test_delayed_mesh_contains_shifted_jumps() -> None:
    model = demo_model(n_states=4)
    policy = random_delay_policy(model, DelayParams(r0=0.1, m=1), seed=4)
    traj = sample_path(model, policy, 0.0, 2, seed=1, index=0)
    for t in traj.segment.jump_times:
        assert t in set(traj.mesh.tolist())
        if t + 0.1 < 1.0:
            assert np.min(np.abs(traj.mesh - (t + 0.1))) == 0.0
    assert len(traj.applied_controls) == traj.mesh.size - 1
    assert traj.mesh[0] == 0.0 and traj.mesh[-1] == 1.0


def test_pathwise_cost_recomputes_the_same_number() -> None:
    model = demo_model(n_states=5)
    policy = random_delay_policy(model, DelayParams(r0=0.2, m=2), seed=6)
    traj = sample_path(model, policy, 0.1, 3, seed=2, index=7)
    assert pathwise_cost(model, policy, traj) == pytest.approx(traj.pathwise_cost, abs=1e-14)
    assert np.all(np.diff(traj.running) >= 0.0)


def test_rate_above_envelope_is_rejected() -> None:
    model = two_state_model(rate=20.0)
    base = uniform_policy(model)
    inflated = _InflatedPolicy(base.params, base.kind, base.table, base.horizon)
    with pytest.raises(InvalidEnvelope):
        sample_path(model, inflated, 0.0, 1, seed=0)


def test_bad_start_is_rejected() -> None:
    model = two_state_model()
    policy = uniform_policy(model)
    with pytest.raises(TimeOutOfRange):
        sample_path(model, policy, 1.0, 1, seed=0)
    with pytest.raises(IndexOutOfRange):
        sample_path(model, policy, 0.0, 3, seed=0)


def test_stopped_cost_at_the_ends() -> None:
    model = demo_model(n_states=4)
    value = solve_backward(model, TimeGrid.uniform(1.0, 1e-2))
    policy = uniform_policy(model)
    traj = sample_path(model, policy, 0.0, 2, seed=8)
    assert stopped_cost(model, policy, traj, 1.0, value) == pytest.approx(traj.pathwise_cost, abs=1e-12)
    assert stopped_cost(model, policy, traj, 0.0, value) == pytest.approx(value.V(0, 2), abs=1e-12)
    with pytest.raises(TimeOutOfRange):
        stopped_cost(model, policy, traj, 1.5, value)


def test_stopped_cost_off_the_mesh() -> None:
    model = _with_running(two_state_model(rate=0.0), ConstantCost(0.5, 1), 0.0, 0.5)
    value = solve_backward(model, TimeGrid.uniform(1.0, 1e-2))
    policy = uniform_policy(model)
    traj = sample_path(model, policy, 0.0, 1, seed=0)
    tau = 0.123456
    assert stopped_cost(model, policy, traj, tau, value) == pytest.approx(0.5 * tau + 0.5 * (1.0 - tau), abs=1e-12)
