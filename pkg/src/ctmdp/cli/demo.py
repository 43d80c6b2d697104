from __future__ import annotations

import numpy as np

from ctmdp.model.types import ActionGrid, ControlledGenerator, CostSpec, LinearCost, LyapunovSpec, ModelSpec

SERVICE_RATES = (0.5, 1.0, 2.0)
ARRIVAL_RATE = 1.0
HOLDING_COST = 0.1
EFFORT_COST = 0.05
TERMINAL_COST = 0.2


def demo_model(n_states: int = 10, horizon: float = 1.0) -> ModelSpec:
    """
    Admission-control birth-death chain: state i is queue length + 1, arrivals at
    rate 1 below the top state, services at the chosen rate u above state 1.

    f(t, i, u) = 0.1 (i - 1) + 0.05 u, g(i) = 0.2 (i - 1), Phi(i) = i with
    lambda0 = kappa0 = 1 and B0 = {1}. C1 and C2 are the exact maxima.
    """
    grid = ActionGrid.from_values(SERVICE_RATES)
    A = grid.size
    rates = np.zeros((A, n_states, n_states))
    for u, mu in enumerate(SERVICE_RATES):
        for i in range(n_states):
            if i + 1 < n_states:
                rates[u, i, i + 1] = ARRIVAL_RATE
            if i > 0:
                rates[u, i, i - 1] = mu
    running = LinearCost(grid, state_coef=HOLDING_COST, action_coef=EFFORT_COST)
    terminal = TERMINAL_COST * np.arange(n_states, dtype=float)
    c1 = HOLDING_COST * (n_states - 1) + EFFORT_COST * max(SERVICE_RATES)
    return ModelSpec(
        n_states=n_states,
        horizon=horizon,
        grid=grid,
        generator=ControlledGenerator(rates, bandwidth=1),
        costs=CostSpec(running=running, terminal=terminal, C0=0.0, C1=c1, C2=float(terminal.max())),
        lyapunov=LyapunovSpec(
            phi=np.arange(1, n_states + 1, dtype=float),
            lambda0=1.0,
            kappa0=1.0,
            B0=frozenset({1}),
        ),
    )
