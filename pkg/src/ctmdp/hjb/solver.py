from __future__ import annotations

import logging
from typing import Literal, Tuple

import numpy as np

from ctmdp.hjb.grid import TimeGrid, ValueFunction
from ctmdp.model.types import GridMismatch, IndexOutOfRange, ModelSpec
from ctmdp.utils.logging_setup import log_event

log = logging.getLogger(__name__)

Scheme = Literal["explicit_euler", "euler", "rk4"]
SCHEMES = ("explicit_euler", "rk4")


class StabilityViolation(ValueError):
    pass


class NonFiniteValue(RuntimeError):
    pass


def normalize_scheme(scheme: str) -> str:
    s = str(scheme).strip().lower()
    if s == "euler":
        s = "explicit_euler"
    if s not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of euler, explicit_euler, rk4")
    return s


def _candidates(model: ModelSpec, t: float, v: np.ndarray) -> np.ndarray:
    """sum_{j != i} q_ij(u)(v_j - v_i) + f(t, i, u), shape (n_states, n_actions)."""
    diff = v[None, :] - v[:, None]
    return np.einsum("uij,ij->iu", model.generator.rates, diff) + model.running_table(t)


def hamiltonian_all(model: ModelSpec, t: float, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Minimized Hamiltonian for every state.

    f and q_ij are affine in the mixture, so the infimum over P(U) is attained at a
    Dirac measure and a minimum over grid actions is exact. np.argmin returns the
    first minimizer, i.e. ties go to the lowest action index.
    """
    cand = _candidates(model, t, np.asarray(v, dtype=float))
    arg = np.argmin(cand, axis=1)
    return cand[np.arange(cand.shape[0]), arg], arg


def hamiltonian(model: ModelSpec, t: float, i: int, v_row: np.ndarray) -> Tuple[float, int]:
    v = np.asarray(v_row, dtype=float).reshape(-1)
    if v.size != model.n_states:
        raise IndexOutOfRange(f"value row has {v.size} entries, model has {model.n_states} states")
    model.check_state(i)
    k = i - 1
    cand = model.generator.rates[:, k, :] @ (v - v[k]) + model.running_table(t)[k]
    u = int(np.argmin(cand))
    return float(cand[u]), u


def _check_finite(v: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(v)):
        raise NonFiniteValue(f"non-finite value encountered at t={t!r}")


def solve_backward(model: ModelSpec, grid: TimeGrid, scheme: str = "explicit_euler") -> ValueFunction:
    """Integrate dV/dt = -H(t, V) backward from V(T, .) = g on the grid."""
    scheme = normalize_scheme(scheme)
    if not grid.matches(model.horizon):
        raise GridMismatch(f"grid horizon {grid.horizon!r} != model horizon {model.horizon!r}")
    dt = grid.step
    M = model.rate_bound
    if scheme == "explicit_euler" and dt * 2.0 * M > 1.0 + 1e-12:
        raise StabilityViolation(
            f"explicit Euler needs dt*2M <= 1; got dt={dt!r}, M={M!r} (dt*2M={dt * 2.0 * M!r})"
        )

    ts = grid.nodes
    N = grid.N
    values = np.empty((N + 1, model.n_states))
    argmin = np.empty((N + 1, model.n_states), dtype=int)
    values[N] = model.costs.terminal

    def H(t: float, v: np.ndarray) -> np.ndarray:
        return hamiltonian_all(model, t, v)[0]

    for n in range(N - 1, -1, -1):
        t1 = ts[n + 1]
        v1 = values[n + 1]
        if scheme == "explicit_euler":
            v0 = v1 + dt * H(t1, v1)
        else:
            th = t1 - 0.5 * dt
            k1 = H(t1, v1)
            k2 = H(th, v1 + 0.5 * dt * k1)
            k3 = H(th, v1 + 0.5 * dt * k2)
            k4 = H(ts[n], v1 + dt * k3)
            v0 = v1 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_finite(v0, ts[n])
        values[n] = v0

    for n in range(N + 1):
        argmin[n] = hamiltonian_all(model, ts[n], values[n])[1]

    log_event(
        log,
        "hjb.solve",
        "Backward HJB solve finished",
        scheme=scheme,
        N=N,
        dt=dt,
        M=M,
        v0_min=float(values[0].min()),
        v0_max=float(values[0].max()),
    )
    return ValueFunction(grid=grid, values=values, argmin=argmin, scheme=scheme)
