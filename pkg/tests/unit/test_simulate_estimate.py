from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from ctmdp.cli.demo import demo_model
from ctmdp.model import ConstantCost, CostSpec, LyapunovSpec
from ctmdp.policy import DelayParams, TimeOutOfRange, random_delay_policy, uniform_policy
from ctmdp.simulate import (
    McEstimate,
    MissingLyapunov,
    estimate_J,
    jump_window_frequency,
    lyapunov_trace,
    sample_path,
    trajectory_frame,
)
from ctmdp.verify import two_state_model


def test_mc_estimate_from_samples() -> None:
    est = McEstimate.from_samples([1.0, 2.0, 3.0, 4.0], seed=9)
    assert est.mean == 2.5
    assert est.stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
    assert est.to_dict() == {"mean": 2.5, "stderr": est.stderr, "n": 4, "seed": 9}
    with pytest.raises(ValueError):
        McEstimate.from_samples([1.0], seed=0)


def test_constant_cost_estimate_has_no_spread() -> None:
    base = two_state_model(rate=2.0)
    model = dataclasses.replace(
        base, costs=CostSpec(running=ConstantCost(0.4, 1), terminal=np.zeros(2), C0=0.0, C1=0.4, C2=0.0)
    )
    est = estimate_J(model, uniform_policy(model), 0.5, 1, n_paths=50, seed=3, workers=1)
    assert est.mean == pytest.approx(0.2, abs=1e-12)
    assert est.stderr == pytest.approx(0.0, abs=1e-12)
    assert est.n_paths == 50


def test_estimate_does_not_depend_on_worker_count() -> None:
    model = demo_model()
    policy = random_delay_policy(model, DelayParams(r0=0.1, m=1), seed=21)
    one = estimate_J(model, policy, 0.0, 3, n_paths=200, seed=5, workers=1)
    many = estimate_J(model, policy, 0.0, 3, n_paths=200, seed=5, workers=4)
    assert one == many


def test_estimate_rejects_tiny_sample() -> None:
    model = two_state_model()
    with pytest.raises(ValueError):
        estimate_J(model, uniform_policy(model), 0.0, 1, n_paths=1, seed=0)


def test_lyapunov_trace_needs_data() -> None:
    model = two_state_model()
    with pytest.raises(MissingLyapunov):
        lyapunov_trace(model, uniform_policy(model), 0.0, 1, 10, 0, [0.5])


def test_lyapunov_trace_frozen_chain() -> None:
    base = two_state_model(rate=0.0)
    model = dataclasses.replace(
        base, lyapunov=LyapunovSpec(phi=np.array([1.0, 4.0]), lambda0=1.0, kappa0=0.5, B0=frozenset({1}))
    )
    trace = lyapunov_trace(model, uniform_policy(model), 0.0, 2, 10, 0, [0.0, 0.5, 1.0])
    assert [p.t for p in trace] == [0.0, 0.5, 1.0]
    for p in trace:
        assert p.estimate.mean == 4.0
        assert p.bound == pytest.approx((4.0 + 0.5) * np.exp(p.t))
        assert p.holds


def test_lyapunov_trace_on_demo() -> None:
    model = demo_model()
    trace = lyapunov_trace(model, uniform_policy(model), 0.0, 1, 400, 2, [0.25, 0.5, 1.0])
    assert all(p.holds for p in trace)
    with pytest.raises(TimeOutOfRange):
        lyapunov_trace(model, uniform_policy(model), 0.5, 1, 10, 2, [0.25])


def test_jump_window_frequency_below_bound() -> None:
    model = demo_model()
    windows = jump_window_frequency(model, uniform_policy(model), 0.0, 1, 0.1, [0.0, 0.5, 0.9], 2000, 4)
    assert len(windows) == 3
    for w in windows:
        assert w.bound == pytest.approx(1.0 - np.exp(-0.3))
        assert 0.0 <= w.estimate.mean <= 1.0
        assert w.holds
    with pytest.raises(TimeOutOfRange):
        jump_window_frequency(model, uniform_policy(model), 0.0, 1, 0.2, [0.9], 10, 4)


def test_trajectory_frame_layout() -> None:
    model = demo_model(n_states=4)
    policy = uniform_policy(model)
    trajs = [sample_path(model, policy, 0.0, 2, seed=1, index=k) for k in range(3)]
    frame = trajectory_frame(trajs)
    assert list(frame.columns) == ["path_id", "t", "state", "event", "cost_so_far"]
    assert sorted(frame["path_id"].unique().tolist()) == [0, 1, 2]
    for k, tr in enumerate(trajs):
        rows = frame[frame["path_id"] == k]
        assert int((rows["event"] == "jump").sum()) == tr.segment.n_jumps
        assert rows["cost_so_far"].iloc[-1] == pytest.approx(tr.pathwise_cost - tr.terminal_cost)
        assert rows["cost_so_far"].is_monotonic_increasing
    assert trajectory_frame([]).empty
