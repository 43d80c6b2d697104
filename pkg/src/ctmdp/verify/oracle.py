from __future__ import annotations

import itertools
import logging
import math
from typing import Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.stats import poisson

from ctmdp.model.types import ActionGrid, ConstantCost, ControlledGenerator, CostSpec, ModelSpec
from ctmdp.policy.path import TimeOutOfRange
from ctmdp.utils.logging_setup import log_event

log = logging.getLogger(__name__)

ORACLE_BUDGET = 1_000_000
ORACLE_MAX_STATES = 6


class ComplexityBudgetExceeded(ValueError):
    pass


def closed_form_two_state(horizon: float, s: float = 0.0, rate: float = 1.0) -> float:
    """P(L_T = 2 | L_s = 1) for the symmetric 2-state chain, i.e. V(s, 1) with g = (0, 1)."""
    return 0.5 * (1.0 - math.exp(-2.0 * rate * (horizon - s)))


def two_state_model(horizon: float = 1.0, rate: float = 1.0, terminal: Sequence[float] = (0.0, 1.0)) -> ModelSpec:
    """Uncontrolled chain q_12 = q_21 = rate with f = 0 and the given terminal cost."""
    g = np.asarray(terminal, dtype=float)
    rates = np.array([[[0.0, rate], [rate, 0.0]]])
    return ModelSpec(
        n_states=2,
        horizon=horizon,
        grid=ActionGrid.from_values([0.0]),
        generator=ControlledGenerator(rates, bandwidth=1),
        costs=CostSpec(running=ConstantCost(0.0, 1), terminal=g, C0=0.0, C1=0.0, C2=float(max(g.max(), 0.0))),
    )


def transient_expm(Q: np.ndarray, t: float) -> np.ndarray:
    """P(t) = exp(Qt)."""
    return expm(np.asarray(Q, dtype=float) * float(t))


def transient_uniformized(Q: np.ndarray, t: float, tol: float = 1e-12) -> np.ndarray:
    """
    P(t) by uniformization: sum_k Poisson(k; Lt) P^k with P = I + Q/L, L the largest
    exit rate. The series is cut where the Poisson tail drops below ``tol``.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    lam = float(np.max(-np.diag(Q))) if n else 0.0
    if lam <= 0.0 or t <= 0.0:
        return np.eye(n)
    P = np.eye(n) + Q / lam
    x = lam * float(t)
    k_max = int(poisson.ppf(1.0 - tol, x)) + 1
    weights = poisson.pmf(np.arange(k_max + 1), x)
    out = np.zeros((n, n))
    term = np.eye(n)
    for w in weights:
        out += w * term
        term = term @ P
    return out


def _interval_blocks(model: ModelSpec, t_mid: float, h: float, assignments: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Transition matrices P_a and expected running costs r_a over one interval of
    length h for every assignment a (row of action indices per state), from the
    exponential of the generator augmented with the cost column.
    """
    n = model.n_states
    states = np.arange(n)
    full = model.generator.full
    f = model.running_table(t_mid)
    C = assignments.shape[0]
    aug = np.zeros((C, n + 1, n + 1))
    aug[:, :n, :n] = full[assignments, states[None, :], :]
    aug[:, :n, n] = f[states[None, :], assignments]
    E = expm(aug * h)
    return E[:, :n, :n], E[:, :n, n]


def brute_force_value(model: ModelSpec, s: float, i: int, n_intervals: int) -> float:
    """
    Best cost over piecewise-constant deterministic Markov policies on n_intervals
    equal pieces of [s, T], each piece assigning one action per state.

    Every sequence of assignments is enumerated while (|U|^|S|)^n_intervals stays
    within the budget. Above it, an exact backward recursion picks the assignment
    of each piece from the state at the start of the piece; that policy class is
    still nonanticipative, so the result is an upper bound on V(s, i) either way.
    """
    model.check_state(i)
    s = float(s)
    T = model.horizon
    if not 0.0 <= s < T:
        raise TimeOutOfRange(f"start time s={s!r} must lie in [0, T={T!r})")
    if int(n_intervals) < 1:
        raise ValueError("n_intervals must be >= 1")
    n_intervals = int(n_intervals)
    n, A = model.n_states, model.n_actions
    if n > ORACLE_MAX_STATES:
        raise ComplexityBudgetExceeded(f"oracle handles at most {ORACLE_MAX_STATES} states, model has {n}")
    n_assign = A**n
    if n_assign * n_intervals > ORACLE_BUDGET:
        raise ComplexityBudgetExceeded(
            f"{n_intervals} intervals x {n_assign} assignments exceeds the budget of {ORACLE_BUDGET}"
        )
    exhaustive = n_assign**n_intervals <= ORACLE_BUDGET

    assignments = np.array(list(itertools.product(range(A), repeat=n)), dtype=int).reshape(n_assign, n)
    h = (T - s) / n_intervals
    mids = s + h * (np.arange(n_intervals) + 0.5)
    blocks = [_interval_blocks(model, float(t), h, assignments) for t in mids]

    g = model.costs.terminal
    if exhaustive:
        # rows: every continuation from the current piece on
        W = g[None, :]
        for P, r in reversed(blocks):
            W = (r[:, None, :] + np.einsum("aij,bj->abi", P, W)).reshape(-1, n)
        best = float(W[:, i - 1].min())
    else:
        w = g.copy()
        for P, r in reversed(blocks):
            w = (r + P @ w).min(axis=0)
        best = float(w[i - 1])

    log_event(
        log,
        "verify.oracle",
        "Brute-force oracle evaluated",
        s=s,
        i=int(i),
        n_intervals=n_intervals,
        method="exhaustive" if exhaustive else "recursion",
        value=best,
    )
    return best
