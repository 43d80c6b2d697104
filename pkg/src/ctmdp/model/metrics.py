from __future__ import annotations

import logging
from typing import Any

import numpy as np
import scipy.sparse as sparse
from scipy.optimize import linprog

from ctmdp.model.types import ActionGrid, ControlledGenerator, GridMismatch, IndexOutOfRange, Mixture

log = logging.getLogger(__name__)

_MAX_TRANSPORT_VARS = 250_000


def _check_mixture(gen: ControlledGenerator, mu: Mixture) -> None:
    if len(mu) != gen.n_actions:
        raise GridMismatch(f"mixture has {len(mu)} weights, generator has {gen.n_actions} actions")


def rate_under_mixture(gen: ControlledGenerator, i: int, j: int, mu: Mixture) -> float:
    """q_ij(mu) = sum_u mu(u) q_ij(u); the diagonal gives -q_i(mu)."""
    n = gen.n_states
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexOutOfRange(f"state pair ({i}, {j}) outside 1..{n}")
    _check_mixture(gen, mu)
    return float(mu.weights @ gen.full[:, i - 1, j - 1])


def generator_matrix(gen: ControlledGenerator, mu: Mixture) -> np.ndarray:
    """Q-matrix induced by the relaxed control mu (rows sum to zero)."""
    _check_mixture(gen, mu)
    return np.tensordot(mu.weights, gen.full, axes=1)


def rate_lipschitz_constant(gen: ControlledGenerator, grid: ActionGrid, i: int, j: int) -> float:
    """max_{u,u'} |q_ij(u) - q_ij(u')| / (smallest nonzero grid gap)."""
    col = gen.rates[:, i - 1, j - 1]
    spread = float(col.max() - col.min())
    gap = grid.min_gap()
    return 0.0 if not np.isfinite(gap) else spread / gap


def _transport_lp(pa: np.ndarray, pb: np.ndarray, cost: np.ndarray) -> float:
    na, nb = pa.size, pb.size
    if na * nb > _MAX_TRANSPORT_VARS:
        raise ValueError(f"transport problem too large ({na}x{nb} couplings)")
    a_rows = sparse.kron(sparse.identity(na), np.ones((1, nb)))
    b_rows = sparse.kron(np.ones((1, na)), sparse.identity(nb))
    A_eq = sparse.vstack([a_rows, b_rows]).tocsr()
    b_eq = np.concatenate([pa / pa.sum(), pb / pb.sum()])
    res = linprog(cost.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0.0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return max(0.0, float(res.fun))


def wasserstein1(a: Mixture, b: Mixture, grid: ActionGrid) -> float:
    """L1-Wasserstein distance between two mixtures on the same action grid."""
    if len(a) != grid.size or len(b) != grid.size:
        raise GridMismatch(f"mixtures of length {len(a)}/{len(b)} on a grid of {grid.size} points")
    if grid.dim == 1:
        order = np.argsort(grid.points[:, 0], kind="stable")
        x = grid.points[order, 0]
        cdf_gap = np.abs(np.cumsum(a.weights[order]) - np.cumsum(b.weights[order]))
        return float(np.sum(cdf_gap[:-1] * np.diff(x)))
    keep_a = a.weights > 0
    keep_b = b.weights > 0
    pts = grid.points
    cost = np.linalg.norm(pts[keep_a][:, None, :] - pts[keep_b][None, :, :], axis=-1)
    return _transport_lp(a.weights[keep_a], b.weights[keep_b], cost)


def control_path_distance(
    times: Any,
    weights_a: Any,
    weights_b: Any,
    grid: ActionGrid,
    horizon: float,
) -> float:
    """
    W1 on [0,T] x U between the occupation measures (1/T) int delta_t x mu_t dt of
    two piecewise-constant relaxed controls sharing the cell boundaries ``times``.

    Ground cost is |s - t| + |x - y|; each cell is represented by its midpoint.
    """
    ts = np.asarray(times, dtype=float)
    wa = np.asarray(weights_a, dtype=float)
    wb = np.asarray(weights_b, dtype=float)
    n_cells = ts.size - 1
    if n_cells < 1 or wa.shape != (n_cells, grid.size) or wb.shape != wa.shape:
        raise GridMismatch("control paths must share cell boundaries and the action grid")
    widths = np.diff(ts) / float(horizon)
    mids = 0.5 * (ts[:-1] + ts[1:])

    def atoms(w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        mass = widths[:, None] * w
        cell, act = np.nonzero(mass > 0)
        return mass[cell, act], mids[cell], act

    ma, ta, ua = atoms(wa)
    mb, tb, ub = atoms(wb)
    pts = grid.points
    cost = np.abs(ta[:, None] - tb[None, :]) + np.linalg.norm(pts[ua][:, None, :] - pts[ub][None, :, :], axis=-1)
    return _transport_lp(ma, mb, cost)
