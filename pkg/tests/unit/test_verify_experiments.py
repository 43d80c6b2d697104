from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from ctmdp.cli.demo import demo_model
from ctmdp.hjb import TimeGrid, solve_backward
from ctmdp.model import ConstantCost, CostSpec, validate
from ctmdp.policy import DelayParams, TimeOutOfRange, policy_rng, uniform_policy
from ctmdp.verify import (
    child_seed,
    closed_form_two_state,
    comparison_suite,
    delay_no_gain,
    dpp_check,
    lipschitz_check,
    oracle_sandwich,
    random_instance,
    tightness_check,
    two_state_model,
)


def _constant_cost_model(c: float):
    base = two_state_model()
    return dataclasses.replace(
        base, costs=CostSpec(running=ConstantCost(c, 1), terminal=np.zeros(2), C0=0.0, C1=c, C2=0.0)
    )


def test_child_seeds_are_stable_and_distinct() -> None:
    assert child_seed(7, 0) == child_seed(7, 0)
    seeds = {child_seed(7, k) for k in range(50)}
    assert len(seeds) == 50
    assert child_seed(7, 0) != child_seed(8, 0)
    assert all(0 <= s < 2**32 for s in seeds)


def test_lipschitz_check_two_state() -> None:
    model = two_state_model()
    report = lipschitz_check(model, solve_backward(model, TimeGrid.uniform(1.0, 1e-3)))
    assert report.passed
    assert report.quantities["empirical"] == pytest.approx(1.0, abs=5e-3)
    assert report.quantities["bound"] == 2.0


@pytest.mark.parametrize("kind", ["deterministic", "first_jump_capped"])
def test_dpp_check_on_a_cost_free_chain(kind: str) -> None:
    model = two_state_model(terminal=(0.0, 0.0))
    value = solve_backward(model, TimeGrid.uniform(1.0, 1e-2))
    report = dpp_check(model, value, 0.0, 1, kind, 0.5, 20, 3, n_policies=2)
    assert report.name == f"dpp[{kind}]"
    assert report.passed
    assert report.quantities["feedback_gap"] == 0.0
    assert len(report.series["policy_gaps"]) == 2


def test_dpp_check_arguments() -> None:
    model = two_state_model()
    value = solve_backward(model, TimeGrid.uniform(1.0, 1e-2))
    with pytest.raises(TimeOutOfRange):
        dpp_check(model, value, 0.5, 1, "deterministic", 0.5, 20, 3)
    with pytest.raises(ValueError):
        dpp_check(model, value, 0.0, 1, "random_time", 0.5, 20, 3)


def test_delay_no_gain_with_constant_cost() -> None:
    model = _constant_cost_model(0.4)
    value = solve_backward(model, TimeGrid.uniform(1.0, 1e-2))
    report = delay_no_gain(model, value, DelayParams(r0=0.1, m=1), n_policies=2, n_paths=20, seed=5)
    assert report.passed
    assert report.quantities["V"] == pytest.approx(0.4, abs=1e-12)
    assert report.quantities["embedded_feedback_gap"] == pytest.approx(0.0, abs=1e-12)
    assert len(report.series["policy_gaps"]) == 3
    with pytest.raises(ValueError):
        delay_no_gain(model, value, DelayParams(m=0), n_policies=2, n_paths=20, seed=5)


def test_oracle_sandwich_two_state() -> None:
    model = two_state_model()
    value = solve_backward(model, TimeGrid.uniform(1.0, 1e-3), "rk4")
    report = oracle_sandwich(model, value, 0.0, 1, [4, 1, 2])
    assert report.passed
    assert report.series["n_intervals"] == [1.0, 2.0, 4.0]
    assert report.quantities["oracle_4"] == pytest.approx(closed_form_two_state(1.0), abs=1e-10)
    assert abs(report.quantities["final_gap"]) <= 1e-6


def test_tightness_on_small_demo() -> None:
    model = demo_model(n_states=4)
    report = tightness_check(model, [uniform_policy(model)], 0.0, 1, [0.5, 1.0], [0.25], 200, 11)
    assert report.passed
    assert report.quantities["M"] == 3.0
    assert report.quantities["window_bound_0.25"] == pytest.approx(1.0 - np.exp(-0.75))


def test_random_instances_are_valid() -> None:
    rng = policy_rng(0, 3)
    for _ in range(5):
        model = random_instance(rng)
        assert 2 <= model.n_states <= 5
        assert 2 <= model.n_actions <= 3
        assert model.generator.bandwidth == model.n_states - 1
        assert validate(model).passed


def test_comparison_suite_small() -> None:
    report = comparison_suite(3, seed=1, dt=1e-2)
    assert report.passed
    assert report.quantities["n_instances"] == 3.0
    assert len(report.series["margins"]) == 3
