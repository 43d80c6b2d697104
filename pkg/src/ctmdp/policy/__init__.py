"""Delay-dependent randomized policies: shift operator, policy tables, builders, files."""

from ctmdp.policy.builders import (
    constant_policy,
    delayed_policy,
    deterministic_curve_policy,
    embed_delay,
    feedback_from_value,
    policy_rng,
    random_delay_policy,
    stationary_policy,
    threshold_policy,
    two_delay_policy,
    uniform_policy,
)
from ctmdp.policy.delay import (
    KINDS,
    DelayParams,
    DelayPolicy,
    IncompletePolicy,
    PolicyTable,
    control_at,
    rebased,
)
from ctmdp.policy.io import PolicyFileError, dump_policy, load_policy, policy_from_dict, policy_to_dict
from ctmdp.policy.path import PathSegment, TimeOutOfRange, shift_eval

__all__ = [
    "KINDS",
    "DelayParams",
    "DelayPolicy",
    "IncompletePolicy",
    "PathSegment",
    "PolicyFileError",
    "PolicyTable",
    "TimeOutOfRange",
    "constant_policy",
    "control_at",
    "delayed_policy",
    "deterministic_curve_policy",
    "dump_policy",
    "embed_delay",
    "feedback_from_value",
    "load_policy",
    "policy_from_dict",
    "policy_rng",
    "policy_to_dict",
    "random_delay_policy",
    "rebased",
    "shift_eval",
    "stationary_policy",
    "threshold_policy",
    "two_delay_policy",
    "uniform_policy",
]
