from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ctmdp.model.types import PROB_TOL, MalformedModel, ModelSpec, observed_bandwidth

log = logging.getLogger(__name__)

_COST_SAMPLES = 65


@dataclass(frozen=True, eq=False)
class AssumptionReport:
    H1_pass: bool
    H2_pass: bool
    H3_pass: bool
    costs_pass: bool
    M: float
    K_declared: int
    K_observed: int
    drift_margins: Optional[np.ndarray]
    messages: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """H1 and H3 hold, cost bounds hold, and H2 holds whenever Lyapunov data is present."""
        h2_ok = self.H2_pass or self.drift_margins is None
        return self.H1_pass and self.H3_pass and self.costs_pass and h2_ok

    @property
    def min_drift_margin(self) -> Optional[float]:
        if self.drift_margins is None:
            return None
        return float(self.drift_margins.min())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "H1_pass": self.H1_pass,
            "H2_pass": self.H2_pass,
            "H3_pass": self.H3_pass,
            "costs_pass": self.costs_pass,
            "M": self.M,
            "K_declared": self.K_declared,
            "K_observed": self.K_observed,
            "min_drift_margin": self.min_drift_margin,
            "drift_margins": None if self.drift_margins is None else self.drift_margins.tolist(),
            "messages": list(self.messages),
        }


def drift(model: ModelSpec, phi: np.ndarray) -> np.ndarray:
    """Q_u Phi(i) = sum_{j != i} q_ij(u)(Phi(j) - Phi(i)), shape (n_states, n_actions)."""
    # full generator rows sum to zero, so Q_u @ phi is exactly the off-diagonal drift
    return np.einsum("uij,j->iu", model.generator.full, phi)


def cost_sample_times(model: ModelSpec) -> np.ndarray:
    ts = np.linspace(0.0, model.horizon, _COST_SAMPLES)
    knots = model.costs.running.knots()
    knots = knots[(knots >= 0.0) & (knots <= model.horizon)]
    return np.unique(np.concatenate([ts, knots]))


def _check_costs(model: ModelSpec, messages: List[str]) -> bool:
    c = model.costs
    ts = cost_sample_times(model)
    table = np.stack([model.running_table(t) for t in ts])  # (n_t, n, A)
    ok = True
    if np.any(table < 0.0):
        messages.append("running cost takes negative values")
        ok = False
    f_max = float(table.max())
    if f_max > c.C1 + PROB_TOL:
        messages.append(f"running cost max {f_max!r} exceeds C1={c.C1!r}")
        ok = False
    g_max = float(c.terminal.max())
    if g_max > c.C2 + PROB_TOL:
        messages.append(f"terminal cost max {g_max!r} exceeds C2={c.C2!r}")
        ok = False
    if ts.size > 1:
        slopes = np.abs(np.diff(table, axis=0)) / np.diff(ts)[:, None, None]
        s_max = float(slopes.max())
        if s_max > c.C0 * (1.0 + 1e-9) + 1e-9:
            messages.append(f"running cost time-slope {s_max!r} exceeds C0={c.C0!r}")
            ok = False
    return ok


def validate(model: ModelSpec) -> AssumptionReport:
    """Mechanical check of H1-H3 plus the cost bounds declared in CostSpec."""
    gen = model.generator
    messages: List[str] = []

    full = gen.full
    row_sums = full.sum(axis=2)
    if np.any(gen.rates < 0.0):
        raise MalformedModel("transition rates must be nonnegative")
    if np.any(np.abs(row_sums) > PROB_TOL * max(1.0, gen.rate_bound)):
        raise MalformedModel("generator rows are not conservative")

    M = gen.rate_bound
    h1 = bool(np.isfinite(M) and np.all(np.isfinite(gen.exit_rates)))
    if not h1:
        messages.append("H1: exit rates are not finite")

    k_obs = observed_bandwidth(gen.rates)
    h3 = k_obs <= gen.bandwidth
    if not h3:
        messages.append(f"H3: observed jump size {k_obs} exceeds declared K={gen.bandwidth}")

    margins: Optional[np.ndarray] = None
    h2 = False
    lyap = model.lyapunov
    if lyap is None:
        messages.append("H2: no Lyapunov data supplied")
    else:
        rhs = lyap.lambda0 * lyap.phi + lyap.kappa0 * lyap.indicator(model.n_states)
        margins = rhs[:, None] - drift(model, lyap.phi)
        h2 = bool(np.all(margins >= -PROB_TOL))
        if not h2:
            i_bad, u_bad = np.unravel_index(int(np.argmin(margins)), margins.shape)
            messages.append(
                f"H2: drift inequality fails at state {i_bad + 1}, action {u_bad} "
                f"(margin {float(margins[i_bad, u_bad])!r})"
            )

    costs_ok = _check_costs(model, messages)

    report = AssumptionReport(
        H1_pass=h1,
        H2_pass=h2,
        H3_pass=h3,
        costs_pass=costs_ok,
        M=float(M),
        K_declared=gen.bandwidth,
        K_observed=k_obs,
        drift_margins=margins,
        messages=messages,
    )
    log.debug("validate: H1=%s H2=%s H3=%s costs=%s M=%s", h1, h2, h3, costs_ok, M)
    return report
