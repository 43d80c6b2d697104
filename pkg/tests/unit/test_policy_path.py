from __future__ import annotations

import numpy as np
import pytest

from ctmdp.policy import PathSegment, TimeOutOfRange, shift_eval


def _path() -> PathSegment:
    return PathSegment(np.array([0.3, 0.7]), np.array([1, 2, 3]), start=0.0, end=1.0)


def test_path_is_right_continuous() -> None:
    path = _path()
    assert path.state_at(0.0) == 1
    assert path.state_at(0.2999) == 1
    assert path.state_at(0.3) == 2
    assert path.state_at(1.0) == 3
    np.testing.assert_array_equal(path.states_at(np.array([0.1, 0.5, 0.9])), [1, 2, 3])
    assert path.n_jumps == 2
    assert path.start_state == 1


def test_shift_clamps_at_start_time() -> None:
    path = _path()
    assert shift_eval(path, 0, 0.25, 0.0, 0.5) == 2
    assert shift_eval(path, 1, 0.25, 0.0, 0.5) == 1
    assert shift_eval(path, 2, 0.25, 0.0, 0.5) == 1
    assert shift_eval(path, 1, 0.25, 0.0, 1.0) == 3
    assert shift_eval(path, 2, 0.25, 0.0, 1.0) == 2
    # with s = 0.4 every look-back before 0.4 reads the state at 0.4
    assert shift_eval(path, 3, 0.25, 0.4, 0.5) == 2


def test_shift_rejects_times_outside_window() -> None:
    path = _path()
    with pytest.raises(TimeOutOfRange):
        shift_eval(path, 0, 0.25, 0.5, 0.4)
    with pytest.raises(TimeOutOfRange):
        shift_eval(path, 0, 0.25, 0.0, 1.5)
    with pytest.raises(ValueError):
        shift_eval(path, -1, 0.25, 0.0, 0.5)
    with pytest.raises(ValueError):
        shift_eval(path, 1, 0.0, 0.0, 0.5)


@pytest.mark.parametrize(
    "jumps, states",
    [
        ([0.5, 0.4], [1, 2, 3]),
        ([0.5], [1, 1]),
        ([0.5], [1, 2, 3]),
        ([1.5], [1, 2]),
    ],
)
def test_malformed_paths_are_rejected(jumps: list, states: list) -> None:
    with pytest.raises(ValueError):
        PathSegment(np.array(jumps), np.array(states), start=0.0, end=1.0)


def test_shift_is_monotone_in_k() -> None:
    # on an increasing path, looking further back can only read a lower state
    rng = np.random.default_rng(3)
    for _ in range(20):
        n_jumps = int(rng.integers(1, 6))
        jumps = np.sort(rng.uniform(0.0, 1.0, size=n_jumps))
        path = PathSegment(jumps, np.arange(1, n_jumps + 2), start=0.0, end=1.0)
        r0 = float(rng.uniform(0.05, 0.5))
        t = float(rng.uniform(0.0, 1.0))
        looked_up = [shift_eval(path, k, r0, 0.0, t) for k in range(6)]
        assert looked_up[0] == path.state_at(t)
        assert all(a >= b for a, b in zip(looked_up, looked_up[1:]))
        assert looked_up[-1] >= path.start_state
