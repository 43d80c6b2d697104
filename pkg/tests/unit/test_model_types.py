from __future__ import annotations

import numpy as np
import pytest

from ctmdp.model import (
    ActionGrid,
    ConstantCost,
    ControlledGenerator,
    CostSpec,
    IndexOutOfRange,
    InvalidMixture,
    LinearCost,
    MalformedModel,
    Mixture,
    ModelSpec,
    TableCost,
)

TRIPLETS = [[1, 2, 0, 1.0], [2, 1, 1, 0.5], [2, 3, 0, 2.0], [3, 2, 1, 1.0]]


def test_from_triplets_builds_conservative_rows() -> None:
    gen = ControlledGenerator.from_triplets(3, 2, TRIPLETS)
    assert gen.n_states == 3
    assert gen.n_actions == 2
    np.testing.assert_allclose(gen.full.sum(axis=2), 0.0, atol=1e-15)
    assert gen.full[0, 1, 1] == -2.0
    assert gen.rate_bound == 2.0
    assert gen.bandwidth == 1
    assert gen.triplets() == [[1, 2, 0, 1.0], [2, 1, 1, 0.5], [2, 3, 0, 2.0], [3, 2, 1, 1.0]]


def test_from_triplets_accepts_consistent_diagonal() -> None:
    gen = ControlledGenerator.from_triplets(2, 1, [[1, 2, 0, 1.5], [1, 1, 0, -1.5]])
    assert gen.exit_rates[0, 0] == 1.5


@pytest.mark.parametrize(
    "entries",
    [
        [[1, 2, 0, 1.0], [1, 1, 0, -3.0]],
        [[1, 2, 0, 1.0], [1, 2, 0, 2.0]],
        [[1, 2, 0, -1.0]],
        [[1, 4, 0, 1.0]],
        [[1, 2, 5, 1.0]],
        [[1, 2, 0]],
    ],
)
def test_from_triplets_rejects_bad_entries(entries: list) -> None:
    with pytest.raises(MalformedModel):
        ControlledGenerator.from_triplets(3, 2, entries)


def test_mixture_validation() -> None:
    assert len(Mixture.uniform(4)) == 4
    with pytest.raises(InvalidMixture):
        Mixture(np.array([0.5, 0.6]))
    with pytest.raises(InvalidMixture):
        Mixture(np.array([1.5, -0.5]))
    with pytest.raises(IndexOutOfRange):
        Mixture.dirac(3, 3)
    mixed = Mixture.dirac(0, 2).blend(Mixture.dirac(1, 2), 0.25)
    np.testing.assert_allclose(mixed.weights, [0.25, 0.75])


def test_action_grid_gap_and_duplicates() -> None:
    grid = ActionGrid.from_values([0.5, 1.0, 2.0])
    assert grid.size == 3
    assert grid.dim == 1
    assert grid.min_gap() == pytest.approx(0.5)
    assert ActionGrid.from_values([1.0]).min_gap() == float("inf")
    with pytest.raises(MalformedModel):
        ActionGrid.from_values([1.0, 1.0])


def test_running_costs_are_vectorized() -> None:
    grid = ActionGrid.from_values([0.0, 2.0])
    lin = LinearCost(grid, base=1.0, state_coef=0.5, action_coef=0.25, time_coef=2.0)
    out = lin.evaluate(np.array([0.0, 1.0]), np.array([0, 2]))
    np.testing.assert_allclose(out, [[1.0, 1.5], [4.0, 4.5]])

    table = TableCost([0.0, 1.0], [[[0.0, 1.0]], [[2.0, 3.0]]])
    np.testing.assert_allclose(table.evaluate(0.25, np.array([0])), [[0.5, 1.5]])
    np.testing.assert_allclose(table.evaluate(5.0, np.array([0])), [[2.0, 3.0]])

    assert ConstantCost(0.7, 3).evaluate(0.1, np.arange(2)).shape == (2, 3)


def test_model_spec_checks_shapes() -> None:
    grid = ActionGrid.from_values([0.0, 1.0])
    gen = ControlledGenerator.from_triplets(3, 2, TRIPLETS)
    costs = CostSpec(running=ConstantCost(0.1, 2), terminal=np.zeros(3), C0=0.0, C1=0.1, C2=0.0)
    model = ModelSpec(n_states=3, horizon=1.0, grid=grid, generator=gen, costs=costs)
    assert model.n_actions == 2
    assert model.scheme_tolerance(1e-3) == pytest.approx(10 * 1e-3 * (0.1 + 2.0 * (0.0 + 0.1 * 1.0)))
    with pytest.raises(IndexOutOfRange):
        model.check_state(4)
    with pytest.raises(MalformedModel):
        ModelSpec(n_states=3, horizon=1.0, grid=ActionGrid.from_values([0.0]), generator=gen, costs=costs)
    with pytest.raises(MalformedModel):
        ModelSpec(n_states=3, horizon=0.0, grid=grid, generator=gen, costs=costs)
    with pytest.raises(MalformedModel):
        CostSpec(running=ConstantCost(0.1, 2), terminal=np.array([-1.0, 0.0, 0.0]), C0=0.0, C1=0.1, C2=0.0)


def test_with_terminal_replaces_g_and_bound() -> None:
    grid = ActionGrid.from_values([0.0, 1.0])
    gen = ControlledGenerator.from_triplets(3, 2, TRIPLETS)
    costs = CostSpec(running=ConstantCost(0.1, 2), terminal=np.zeros(3), C0=0.0, C1=0.1, C2=0.0)
    model = ModelSpec(n_states=3, horizon=1.0, grid=grid, generator=gen, costs=costs)
    other = model.with_terminal([0.0, 0.5, 2.0])
    assert other.costs.C2 == 2.0
    assert other.costs.g(3) == 2.0
    assert model.costs.g(3) == 0.0
