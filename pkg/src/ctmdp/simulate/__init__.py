"""Thinning sampler for the controlled jump process and Monte Carlo estimators."""

from ctmdp.simulate.estimate import (
    McEstimate,
    MissingLyapunov,
    TracePoint,
    WindowFrequency,
    estimate_functional,
    estimate_J,
    jump_window_frequency,
    lyapunov_trace,
    trajectory_frame,
)
from ctmdp.simulate.sampler import (
    DEFAULT_QUADRATURE_STEP,
    InvalidEnvelope,
    Trajectory,
    first_jump_time,
    path_rng,
    pathwise_cost,
    sample_path,
    stopped_cost,
)

__all__ = [
    "DEFAULT_QUADRATURE_STEP",
    "InvalidEnvelope",
    "McEstimate",
    "MissingLyapunov",
    "TracePoint",
    "Trajectory",
    "WindowFrequency",
    "estimate_J",
    "estimate_functional",
    "first_jump_time",
    "jump_window_frequency",
    "lyapunov_trace",
    "path_rng",
    "pathwise_cost",
    "sample_path",
    "stopped_cost",
    "trajectory_frame",
]
