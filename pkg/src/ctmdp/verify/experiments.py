from __future__ import annotations

import logging
from typing import Callable, Dict, List, Literal, Optional, Sequence

import numpy as np

from ctmdp.hjb.checks import comparison_test, lipschitz_bound, time_lipschitz_constant
from ctmdp.hjb.grid import TimeGrid, ValueFunction
from ctmdp.model.types import ActionGrid, ControlledGenerator, CostSpec, GridMismatch, ModelSpec, TableCost
from ctmdp.policy.builders import embed_delay, feedback_from_value, policy_rng, random_delay_policy
from ctmdp.policy.delay import DelayParams, DelayPolicy
from ctmdp.policy.path import TimeOutOfRange
from ctmdp.simulate.estimate import McEstimate, estimate_functional, estimate_J, jump_window_frequency, lyapunov_trace
from ctmdp.simulate.sampler import Trajectory, first_jump_time, stopped_cost
from ctmdp.utils.logging_setup import log_event
from ctmdp.utils.run_context import run_scope
from ctmdp.verify.oracle import brute_force_value
from ctmdp.verify.report import ExperimentReport

log = logging.getLogger(__name__)

TauKind = Literal["deterministic", "first_jump_capped"]

_ORDER_TOL = 1e-12


def child_seed(seed: int, *key: int) -> int:
    """32-bit seed for sub-task ``key`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(2, *(int(k) for k in key)))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _check_value(model: ModelSpec, value: ValueFunction) -> None:
    if value.n_states != model.n_states or not value.grid.matches(model.horizon):
        raise GridMismatch("value function was not computed on this model")


def _random_family(
    model: ModelSpec,
    params: DelayParams,
    n_policies: int,
    seed: int,
    grid: TimeGrid,
) -> List[DelayPolicy]:
    return [random_delay_policy(model, params, child_seed(seed, k), grid) for k in range(int(n_policies))]


def dpp_check(
    model: ModelSpec,
    value: ValueFunction,
    s: float,
    i: int,
    tau_kind: TauKind,
    t1: float,
    n_paths: int,
    seed: int,
    *,
    n_policies: int = 20,
    params: Optional[DelayParams] = None,
    workers: Optional[int] = None,
) -> ExperimentReport:
    """
    Dynamic programming check with tau = t1 or tau = (first jump) ^ t1.

    The HJB feedback must reproduce V(s, i) as E[int_s^tau f dt + V(tau, L_tau)];
    every random delay policy must not go below it.
    """
    _check_value(model, value)
    s, t1 = float(s), float(t1)
    if not s < t1 <= model.horizon:
        raise TimeOutOfRange(f"need s < t1 <= T, got s={s!r}, t1={t1!r}")
    if tau_kind not in ("deterministic", "first_jump_capped"):
        raise ValueError(f"unknown stopping time kind {tau_kind!r}")
    params = params or DelayParams(r0=0.1, m=1, s=s)

    def tau_of(tr: Trajectory) -> float:
        return t1 if tau_kind == "deterministic" else min(first_jump_time(tr), t1)

    def stopped(policy: DelayPolicy) -> Callable[[Trajectory], float]:
        return lambda tr: stopped_cost(model, policy, tr, tau_of(tr), value)

    V = value.at_state(s, i)
    step = value.grid.step
    tol = model.scheme_tolerance(step)

    feedback = feedback_from_value(value, model)
    fb = McEstimate.from_samples(
        estimate_functional(
            model, feedback, s, i, n_paths, seed, stopped(feedback), quadrature_step=step, workers=workers
        ),
        seed,
    )
    fb_ok = abs(fb.mean - V) <= 3.0 * fb.stderr + tol

    gaps: List[float] = []
    margins: List[float] = []
    for pol in _random_family(model, params, n_policies, seed, value.grid):
        with run_scope(policy_id=pol.name):
            est = McEstimate.from_samples(
                estimate_functional(
                    model, pol, s, i, n_paths, seed, stopped(pol), quadrature_step=step, workers=workers
                ),
                seed,
            )
        gaps.append(est.mean - V)
        margins.append(est.mean - V + 3.0 * est.stderr + tol)

    lower_ok = all(m >= 0.0 for m in margins)
    report = ExperimentReport(
        name=f"dpp[{tau_kind}]",
        quantities={
            "V": V,
            "t1": t1,
            "feedback_mean": fb.mean,
            "feedback_stderr": fb.stderr,
            "feedback_gap": fb.mean - V,
            "scheme_tolerance": tol,
            "min_gap": min(gaps) if gaps else 0.0,
            "min_margin": min(margins) if margins else 0.0,
            "n_policies": float(len(gaps)),
            "n_paths": float(n_paths),
        },
        passed=bool(fb_ok and lower_ok),
        tolerance=tol,
        details=(
            f"feedback {'matches' if fb_ok else 'misses'} V(s,i) within 3*stderr + tol; "
            f"{sum(m >= 0.0 for m in margins)}/{len(margins)} random delay policies stay above it"
        ),
        series={"policy_gaps": gaps},
    )
    log_event(log, "verify.dpp", "DPP check finished", **report.quantities, passed=report.passed)
    return report


def lipschitz_check(model: ModelSpec, value: ValueFunction) -> ExperimentReport:
    _check_value(model, value)
    empirical = time_lipschitz_constant(value)
    bound = lipschitz_bound(model)
    slack = 10.0 * value.grid.step * model.rate_bound * model.costs.C1
    passed = empirical <= bound + slack
    return ExperimentReport(
        name="lipschitz",
        quantities={"empirical": empirical, "bound": bound, "slack": slack},
        passed=bool(passed),
        tolerance=slack,
        details=f"max |V(t+dt,i) - V(t,i)|/dt = {empirical:.6g} vs 3C1 + 2MC2 + TC0 = {bound:.6g}",
    )


def delay_no_gain(
    model: ModelSpec,
    value: ValueFunction,
    params: DelayParams,
    n_policies: int,
    n_paths: int,
    seed: int,
    *,
    s: float = 0.0,
    i: int = 1,
    workers: Optional[int] = None,
) -> ExperimentReport:
    """
    No delay policy beats V(s, i) beyond Monte Carlo and scheme error, and the
    delay-free feedback attains it. The feedback embedded with m delayed slots is
    part of the tested family.
    """
    _check_value(model, value)
    if params.m < 1:
        raise ValueError("delay_no_gain needs at least one delayed slot (m >= 1)")
    params = DelayParams(r0=params.r0, m=params.m, s=float(s))
    V = value.at_state(s, i)
    tol = model.scheme_tolerance(value.grid.step)

    feedback = feedback_from_value(value, model)
    fb = estimate_J(model, feedback, s, i, n_paths, seed, quadrature_step=value.grid.step, workers=workers)
    fb_ok = fb.mean <= V + 3.0 * fb.stderr + tol and fb.mean >= V - 3.0 * fb.stderr - tol

    family = _random_family(model, params, n_policies, seed, value.grid) + [embed_delay(feedback, params)]
    gaps: List[float] = []
    margins: List[float] = []
    stderrs: List[float] = []
    for pol in family:
        with run_scope(policy_id=pol.name):
            est = estimate_J(model, pol, s, i, n_paths, seed, quadrature_step=value.grid.step, workers=workers)
        gaps.append(est.mean - V)
        stderrs.append(est.stderr)
        margins.append(est.mean - V + 3.0 * est.stderr + tol)

    lower_ok = all(m >= 0.0 for m in margins)
    random_gaps = np.asarray(gaps[:-1]) if len(gaps) > 1 else np.zeros(1)
    report = ExperimentReport(
        name="delay-no-gain",
        quantities={
            "V": V,
            "feedback_mean": fb.mean,
            "feedback_stderr": fb.stderr,
            "feedback_gap": fb.mean - V,
            "embedded_feedback_gap": gaps[-1],
            "scheme_tolerance": tol,
            "min_gap": float(random_gaps.min()),
            "median_gap": float(np.median(random_gaps)),
            "max_gap": float(random_gaps.max()),
            "min_margin": min(margins),
            "r0": params.r0,
            "m": float(params.m),
            "n_policies": float(n_policies),
            "n_paths": float(n_paths),
        },
        passed=bool(fb_ok and lower_ok),
        tolerance=tol,
        details=(
            f"{sum(m >= 0.0 for m in margins)}/{len(margins)} delay policies stay above V - (3*stderr + tol); "
            f"feedback gap {fb.mean - V:+.3e} (stderr {fb.stderr:.3e})"
        ),
        series={"policy_gaps": gaps, "policy_stderrs": stderrs},
    )
    log_event(log, "verify.delay_no_gain", "Delay-no-gain finished", **report.quantities, passed=report.passed)
    return report


def oracle_sandwich(
    model: ModelSpec,
    value: ValueFunction,
    s: float,
    i: int,
    intervals: Sequence[int],
    *,
    lower_tol: float = 1e-3,
    final_gap: float = 5e-3,
) -> ExperimentReport:
    """Oracle values over refining interval counts: above V - lower_tol, nonincreasing, close at the end."""
    _check_value(model, value)
    V = value.at_state(s, i)
    counts = sorted(int(k) for k in intervals)
    values = [brute_force_value(model, s, i, k) for k in counts]
    above = all(v >= V - lower_tol for v in values)
    monotone = all(b <= a + _ORDER_TOL for a, b in zip(values, values[1:]))
    gap = values[-1] - V
    passed = above and monotone and gap <= final_gap
    quantities: Dict[str, float] = {"V": V, "final_gap": gap, "lower_tol": lower_tol, "gap_limit": final_gap}
    for k, v in zip(counts, values):
        quantities[f"oracle_{k}"] = v
    return ExperimentReport(
        name="oracle",
        quantities=quantities,
        passed=bool(passed),
        tolerance=lower_tol,
        details=(
            f"bounded below by V: {above}; nonincreasing in n_intervals: {monotone}; "
            f"gap at n={counts[-1]}: {gap:.3e}"
        ),
        series={"n_intervals": [float(k) for k in counts], "oracle": values},
    )


def tightness_check(
    model: ModelSpec,
    policies: Sequence[DelayPolicy],
    s: float,
    i: int,
    checkpoints: Sequence[float],
    deltas: Sequence[float],
    n_paths: int,
    seed: int,
    *,
    workers: Optional[int] = None,
) -> ExperimentReport:
    """Moment bound (Phi(i) + kappa0 T) e^{lambda0 t} and window bound 1 - e^{-M delta} under each policy."""
    s = float(s)
    moment_margins: List[float] = []
    window_margins: List[float] = []
    max_freq: Dict[float, float] = {}
    for k, pol in enumerate(policies):
        pseed = child_seed(seed, k)
        with run_scope(policy_id=pol.name):
            trace = lyapunov_trace(model, pol, s, i, n_paths, pseed, checkpoints, workers=workers)
            moment_margins.extend(p.margin for p in trace)
            for delta in deltas:
                starts = s + float(delta) * np.arange(int(np.floor((model.horizon - s) / float(delta) + 1e-9)))
                windows = jump_window_frequency(model, pol, s, i, float(delta), starts, n_paths, pseed, workers=workers)
                window_margins.extend(w.margin for w in windows)
                top = max(w.estimate.mean for w in windows)
                max_freq[float(delta)] = max(max_freq.get(float(delta), 0.0), top)

    passed = all(m >= 0.0 for m in moment_margins) and all(m >= 0.0 for m in window_margins)
    quantities: Dict[str, float] = {
        "min_moment_margin": min(moment_margins),
        "min_window_margin": min(window_margins),
        "M": model.rate_bound,
        "n_policies": float(len(policies)),
        "n_paths": float(n_paths),
    }
    for delta, freq in sorted(max_freq.items()):
        quantities[f"max_frequency_{delta:g}"] = freq
        quantities[f"window_bound_{delta:g}"] = float(-np.expm1(-model.rate_bound * delta))
    return ExperimentReport(
        name="tightness",
        quantities=quantities,
        passed=bool(passed),
        tolerance=0.0,
        details=f"{len(moment_margins)} moment checks and {len(window_margins)} window checks, 3*stderr slack",
    )


def random_instance(rng: np.random.Generator, horizon: float = 1.0) -> ModelSpec:
    """Small random model: 2..5 states, 2..3 actions, tabulated running cost in [0, 1]."""
    n = int(rng.integers(2, 6))
    A = int(rng.integers(2, 4))
    rates = rng.uniform(0.0, 2.0, size=(A, n, n)) * (rng.random((A, n, n)) < 0.7)
    times = np.array([0.0, 0.5 * horizon, horizon])
    values = rng.uniform(0.0, 1.0, size=(times.size, n, A))
    g = rng.uniform(0.0, 1.0, size=n)
    running = TableCost(times, values)
    c0 = float((np.abs(np.diff(values, axis=0)) / np.diff(times)[:, None, None]).max())
    return ModelSpec(
        n_states=n,
        horizon=horizon,
        grid=ActionGrid.from_values(np.sort(rng.uniform(0.0, 1.0, size=A)).tolist()),
        generator=ControlledGenerator(rates, bandwidth=n - 1),
        costs=CostSpec(running=running, terminal=g, C0=c0, C1=float(values.max()), C2=float(g.max())),
    )


def comparison_suite(n_instances: int, seed: int, dt: float, scheme: str = "explicit_euler") -> ExperimentReport:
    """Comparison test on random small instances with independent terminal data g1, g2."""
    rng = policy_rng(seed, 3)
    margins: List[float] = []
    failures: List[float] = []
    for k in range(int(n_instances)):
        model = random_instance(rng)
        g1 = rng.uniform(0.0, 1.0, size=model.n_states)
        g2 = rng.uniform(0.0, 1.0, size=model.n_states)
        rep = comparison_test(model, g1, g2, TimeGrid.uniform(model.horizon, dt), scheme)
        margins.append(rep.margin)
        if not rep.passed:
            failures.append(float(k))
    return ExperimentReport(
        name="comparison",
        quantities={
            "n_instances": float(n_instances),
            "failures": float(len(failures)),
            "min_margin": min(margins) if margins else 0.0,
            "dt": float(dt),
        },
        passed=not failures,
        tolerance=0.0,
        details="sup(V2 - V1) <= sup(g2 - g1) + tol(dt) on every instance",
        series={"margins": margins, "failed_instances": failures},
    )
