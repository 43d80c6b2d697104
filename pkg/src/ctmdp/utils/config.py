from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Dict

import yaml


DEFAULT_CONFIG_NAME = "config.yaml"

DEFAULTS: Dict[str, Any] = {
    "app": {"log_dir": "", "out_dir": ""},
    "solver": {"dt": 1e-3, "scheme": "euler"},
    "simulate": {"n_paths": 10000, "seed": 20240101, "quadrature_step": None},
    "verify": {
        "dpp_policies": 20,
        "dpp_horizon": 0.2,
        "delay_policies": 50,
        "delay_r0": 0.1,
        "delay_m": 1,
        "tightness_policies": 5,
        "tightness_checkpoints": [0.25, 0.5, 1.0],
        "tightness_windows": [0.05, 0.1],
        "oracle_states": 4,
        "oracle_intervals": [2, 4, 8],
        "comparison_instances": 25,
    },
    "demo": {"n_paths": 4000, "delay_n_paths": 10000},
}


def load_yaml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        return {}
    data = yaml.safe_load(path.read_text(encoding="utf-8"))
    return data or {}


def save_yaml(path: Path, data: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(data, sort_keys=False, allow_unicode=True), encoding="utf-8")


def deep_get(d: Dict[str, Any], keys: list[str], default: Any = None) -> Any:
    cur: Any = d
    for k in keys:
        if not isinstance(cur, dict) or k not in cur:
            return default
        cur = cur[k]
    return cur


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Return a copy of ``base`` with ``override`` merged in (dicts recursively)."""
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        elif v is not None:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: Path | None) -> Dict[str, Any]:
    """Read config.yaml and fill missing sections from DEFAULTS."""
    raw = load_yaml(path) if path is not None else {}
    return deep_merge(DEFAULTS, raw)
