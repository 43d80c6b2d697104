from __future__ import annotations

import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ctmdp.hjb.grid import TimeGrid
from ctmdp.model.types import PROB_TOL, ModelSpec
from ctmdp.policy.builders import constant_policy, random_delay_policy, threshold_policy, uniform_policy
from ctmdp.policy.delay import KINDS, DelayParams, DelayPolicy, IncompletePolicy, PolicyTable

log = logging.getLogger(__name__)

_DUMP_ALL_LIMIT = 4096


class PolicyFileError(ValueError):
    pass


class PolicyFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str
    r0: float = Field(default=1.0, gt=0.0)
    m: int = Field(default=0, ge=0)
    s: float = Field(default=0.0, ge=0.0)
    table: Optional[List[List[float]]] = None
    default: Optional[List[float]] = None
    builtin: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _one_source(self) -> "PolicyFile":
        if (self.table is None) == (self.builtin is None):
            raise ValueError("policy file needs exactly one of 'table' or 'builtin'")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {', '.join(KINDS)}")
        return self


def _check_weights(raw: List[float], n_actions: int, where: str) -> np.ndarray:
    w = np.asarray(raw, dtype=float)
    if w.size != n_actions or np.any(w < 0.0) or abs(float(w.sum()) - 1.0) > PROB_TOL:
        raise PolicyFileError(f"{where}: weights {raw!r} are not a mixture over {n_actions} actions")
    return w


def _table_policy(spec: PolicyFile, model: ModelSpec, grid: TimeGrid) -> DelayPolicy:
    n, m, A = model.n_states, spec.m, model.n_actions
    width = 1 + (m + 1) + A
    n_nodes = grid.N + 1
    entries: Dict[Tuple[int, ...], List[Tuple[int, np.ndarray]]] = defaultdict(list)
    for row in spec.table or []:
        if len(row) != width:
            raise PolicyFileError(f"table entry {row!r} must have {width} numbers [t_index, i0..i{m}, weights...]")
        t_idx = int(row[0])
        labels = tuple(int(x) for x in row[1 : m + 2])
        if not 0 <= t_idx < n_nodes:
            raise PolicyFileError(f"table entry t_index {t_idx} outside 0..{n_nodes - 1}")
        if any(not 1 <= lab <= n for lab in labels):
            raise PolicyFileError(f"table entry states {labels} outside 1..{n}")
        entries[labels].append((t_idx, _check_weights(row[m + 2 :], A, f"entry {labels}@{t_idx}")))

    default = None if spec.default is None else _check_weights(spec.default, A, "default")
    for labels, items in entries.items():
        if min(t for t, _ in items) > 0 and default is None:
            raise PolicyFileError(f"states {labels} have no entry at t_index 0 and no default is given")

    def rows(labels: Tuple[int, ...]) -> np.ndarray:
        items = sorted(entries.get(labels, []), key=lambda it: it[0])
        if not items:
            if default is None:
                raise IncompletePolicy(f"policy table has no entry for states {labels}")
            return default
        out = np.empty((n_nodes, A))
        out[:] = default if default is not None else items[0][1]
        for t_idx, w in items:
            out[t_idx:] = w
        return out

    table = PolicyTable(grid.nodes, n, m, A, rows)
    return DelayPolicy(DelayParams(spec.r0, m, spec.s), spec.kind, table, model.horizon, name="table")


def _builtin_policy(spec: PolicyFile, model: ModelSpec, grid: TimeGrid) -> DelayPolicy:
    p = spec.params
    params = DelayParams(spec.r0, spec.m, spec.s)
    try:
        if spec.builtin == "uniform":
            return uniform_policy(model, params)
        if spec.builtin == "constant":
            return constant_policy(model, int(p["action"]), params)
        if spec.builtin == "threshold":
            return threshold_policy(model, int(p["threshold"]), int(p["low"]), int(p["high"]), params)
        if spec.builtin == "random":
            return random_delay_policy(model, params, int(p["seed"]), grid)
    except KeyError as exc:
        raise PolicyFileError(f"builtin {spec.builtin!r} is missing parameter {exc}") from exc
    raise PolicyFileError(f"unknown builtin policy {spec.builtin!r}")


def policy_from_dict(data: Dict[str, Any], model: ModelSpec, grid: TimeGrid) -> DelayPolicy:
    try:
        spec = PolicyFile.model_validate(data)
    except ValidationError as exc:
        raise PolicyFileError(f"invalid policy file: {exc}") from exc
    if spec.table is not None:
        return _table_policy(spec, model, grid)
    return _builtin_policy(spec, model, grid)


def load_policy(path: Path, model: ModelSpec, grid: TimeGrid) -> DelayPolicy:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise PolicyFileError(f"cannot parse policy file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise PolicyFileError(f"policy file {path} must contain an object")
    return policy_from_dict(data, model, grid)


def policy_to_dict(policy: DelayPolicy) -> Dict[str, Any]:
    p = policy.params
    out: Dict[str, Any] = {"kind": policy.kind, "r0": p.r0, "m": p.m, "s": p.s}
    if policy.source is not None:
        out["builtin"] = policy.source["builtin"]
        out["params"] = dict(policy.source.get("params", {}))
        return out

    table = policy.table
    if table.n_states ** (table.m + 1) <= _DUMP_ALL_LIMIT:
        table.materialize()
    else:
        log.warning("policy has %d state tuples; dumping only the materialized ones", table.n_states ** (table.m + 1))
    entries: List[List[float]] = []
    for code, rows in sorted(table.materialized().items()):
        labels = list(table.decode(code))
        prev = None
        for t_idx, w in enumerate(rows):
            if prev is not None and np.array_equal(w, prev):
                continue
            entries.append([t_idx, *labels, *(float(x) for x in w)])
            prev = w
    out["table"] = entries
    return out


def dump_policy(policy: DelayPolicy, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(policy_to_dict(policy), indent=1) + "\n", encoding="utf-8")
