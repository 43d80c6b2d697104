from __future__ import annotations

import logging
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from ctmdp.hjb.grid import TimeGrid, ValueFunction
from ctmdp.hjb.solver import hamiltonian_all
from ctmdp.model.types import GridMismatch, Mixture, ModelSpec
from ctmdp.policy.delay import DelayParams, DelayPolicy, PolicyTable

log = logging.getLogger(__name__)

DEFAULT_POLICY_DT = 1e-3

Rule = Union[Callable[[int], Mixture], Mapping[int, Mixture]]


def _rule_weights(rule: Rule, state: int) -> np.ndarray:
    mu = rule[state] if isinstance(rule, Mapping) else rule(state)
    return np.asarray(mu.weights, dtype=float)


def _static_nodes() -> np.ndarray:
    return np.zeros(1)


def policy_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream for (seed, key...): Philox keyed through a SeedSequence spawn key."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


def feedback_from_value(value: ValueFunction, model: ModelSpec) -> DelayPolicy:
    """Markov policy h(t_n, i) = Dirac at the Hamiltonian minimizer at V(t_n, .)."""
    if value.n_states != model.n_states or not value.grid.matches(model.horizon):
        raise GridMismatch("value function was not computed on this model")
    ts = value.grid.nodes
    arg = np.stack([hamiltonian_all(model, t, value.values[n])[1] for n, t in enumerate(ts)])
    eye = np.eye(model.n_actions)

    def rows(labels: Tuple[int, ...]) -> np.ndarray:
        return eye[arg[:, labels[0] - 1]]

    table = PolicyTable(ts, model.n_states, 0, model.n_actions, rows)
    table.materialize()
    return DelayPolicy(DelayParams(m=0), "feedback", table, model.horizon, name="hjb-feedback")


def random_delay_policy(
    model: ModelSpec,
    params: DelayParams,
    seed: int,
    grid: Optional[TimeGrid] = None,
) -> DelayPolicy:
    """
    Random h: for every state tuple an independent Dirichlet(1,...,1) mixture per
    grid node. Rows are generated on demand from a stream keyed by (seed, tuple code),
    so the policy is a deterministic function of the seed whatever the access order.
    """
    grid = grid or TimeGrid.uniform(model.horizon, DEFAULT_POLICY_DT)
    if not grid.matches(model.horizon):
        raise GridMismatch("policy grid horizon differs from the model horizon")
    n_nodes = grid.N + 1
    n_actions = model.n_actions
    alpha = np.ones(n_actions)
    table: PolicyTable

    def rows(labels: Tuple[int, ...]) -> np.ndarray:
        w = policy_rng(seed, table.encode(labels)).dirichlet(alpha, size=n_nodes)
        return w / w.sum(axis=1, keepdims=True)

    table = PolicyTable(grid.nodes, model.n_states, params.m, n_actions, rows)
    kind = "markov" if params.m == 0 else ("delayed" if params.m == 1 else "multi_delay")
    return DelayPolicy(
        params,
        kind,
        table,
        model.horizon,
        name=f"random-{seed}",
        source={"builtin": "random", "params": {"seed": int(seed)}},
    )


def stationary_policy(model: ModelSpec, rule: Rule, *, s: float = 0.0, name: str = "stationary") -> DelayPolicy:
    """mu_t = h(current state): stationary randomized Markov policy."""
    table = PolicyTable(_static_nodes(), model.n_states, 0, model.n_actions, lambda lab: _rule_weights(rule, lab[0]))
    return DelayPolicy(DelayParams(m=0, s=s), "markov", table, model.horizon, name=name)


def delayed_policy(model: ModelSpec, r0: float, rule: Rule, *, s: float = 0.0, name: str = "delayed") -> DelayPolicy:
    """mu_t = h(state at (t - r0) v s): decisions from the delayed state only."""
    table = PolicyTable(_static_nodes(), model.n_states, 1, model.n_actions, lambda lab: _rule_weights(rule, lab[1]))
    return DelayPolicy(DelayParams(r0=r0, m=1, s=s), "delayed", table, model.horizon, name=name)


def two_delay_policy(
    model: ModelSpec,
    grid: TimeGrid,
    r0: float,
    fn: Callable[[float, int, int], Mixture],
    *,
    s: float = 0.0,
    name: str = "two-delay",
) -> DelayPolicy:
    """mu_t = h(t, state at (t - r0) v s, state at (t - 2 r0) v s)."""
    ts = grid.nodes

    def rows(labels: Tuple[int, ...]) -> np.ndarray:
        return np.stack([fn(float(t), labels[1], labels[2]).weights for t in ts])

    table = PolicyTable(ts, model.n_states, 2, model.n_actions, rows)
    return DelayPolicy(DelayParams(r0=r0, m=2, s=s), "multi_delay", table, model.horizon, name=name)


def deterministic_curve_policy(
    model: ModelSpec,
    grid: TimeGrid,
    r0: float,
    curve: Callable[[float, int], int],
    *,
    s: float = 0.0,
    name: str = "curve",
) -> DelayPolicy:
    """mu_t = Dirac at u_t(i), i the state at (t - r0) v s; ``curve`` returns an action index."""
    ts = grid.nodes
    eye = np.eye(model.n_actions)

    def rows(labels: Tuple[int, ...]) -> np.ndarray:
        return eye[[int(curve(float(t), labels[1])) for t in ts]]

    table = PolicyTable(ts, model.n_states, 1, model.n_actions, rows)
    return DelayPolicy(DelayParams(r0=r0, m=1, s=s), "deterministic_curve", table, model.horizon, name=name)


def embed_delay(policy: DelayPolicy, params: DelayParams) -> DelayPolicy:
    """Same decisions as a Markov policy, expressed with m delayed slots that h ignores."""
    if policy.params.m != 0:
        raise ValueError("only policies without delayed slots can be embedded")
    base = policy.table

    def rows(labels: Tuple[int, ...]) -> np.ndarray:
        return base.rows_for(base.encode(labels[:1]))

    table = PolicyTable(base.node_times, base.n_states, params.m, base.n_actions, rows)
    kind = "delayed" if params.m == 1 else ("multi_delay" if params.m > 1 else policy.kind)
    return DelayPolicy(params, kind, table, policy.horizon, name=f"{policy.name}+delay{params.m}")


def uniform_policy(model: ModelSpec, params: DelayParams | None = None) -> DelayPolicy:
    params = params or DelayParams()
    w = np.full(model.n_actions, 1.0 / model.n_actions)
    table = PolicyTable(_static_nodes(), model.n_states, params.m, model.n_actions, lambda _lab: w)
    kind = "markov" if params.m == 0 else ("delayed" if params.m == 1 else "multi_delay")
    return DelayPolicy(params, kind, table, model.horizon, name="uniform", source={"builtin": "uniform", "params": {}})


def _markov_builtin(
    model: ModelSpec, rule: Rule, params: DelayParams | None, name: str, source: Dict[str, Any]
) -> DelayPolicy:
    """Stationary rule carried over to the file's (r0, m, s); delayed slots are ignored by h."""
    params = params or DelayParams()
    pol = stationary_policy(model, rule, s=params.s, name=name)
    if params.m > 0:
        pol = embed_delay(pol, params)
    return DelayPolicy(pol.params, pol.kind, pol.table, pol.horizon, name=name, source=source)


def constant_policy(model: ModelSpec, action: int, params: DelayParams | None = None) -> DelayPolicy:
    mu = Mixture.dirac(int(action), model.n_actions)
    return _markov_builtin(
        model, lambda _i: mu, params, f"constant-{action}", {"builtin": "constant", "params": {"action": int(action)}}
    )


def threshold_policy(
    model: ModelSpec, threshold: int, low: int, high: int, params: DelayParams | None = None
) -> DelayPolicy:
    """Action ``low`` in states below ``threshold``, ``high`` from it on (queue-length rule)."""
    lo = Mixture.dirac(int(low), model.n_actions)
    hi = Mixture.dirac(int(high), model.n_actions)
    return _markov_builtin(
        model,
        lambda i: lo if i < threshold else hi,
        params,
        f"threshold-{threshold}",
        {"builtin": "threshold", "params": {"threshold": int(threshold), "low": int(low), "high": int(high)}},
    )
