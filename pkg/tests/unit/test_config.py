from __future__ import annotations

from pathlib import Path

from ctmdp.utils.config import DEFAULTS, deep_get, deep_merge, load_config, save_yaml


def test_missing_config_gives_defaults(tmp_path: Path):
    cfg = load_config(tmp_path / "nope.yaml")
    assert cfg == DEFAULTS
    assert deep_get(cfg, ["solver", "dt"]) == 1e-3
    assert deep_get(cfg, ["solver", "missing"], "x") == "x"


def test_user_values_override_defaults(tmp_path: Path):
    target = tmp_path / "config.yaml"
    save_yaml(target, {"solver": {"scheme": "rk4"}, "verify": {"oracle_intervals": [2, 4]}})
    cfg = load_config(target)
    assert cfg["solver"] == {"dt": 1e-3, "scheme": "rk4"}
    assert cfg["verify"]["oracle_intervals"] == [2, 4]
    assert cfg["verify"]["delay_m"] == 1


def test_deep_merge_does_not_mutate_base():
    base = {"a": {"b": 1}}
    merged = deep_merge(base, {"a": {"c": 2}, "d": None})
    assert merged == {"a": {"b": 1, "c": 2}}
    assert base == {"a": {"b": 1}}


def test_shipped_config_matches_defaults():
    repo = Path(__file__).resolve().parents[2]
    assert load_config(repo / "config.yaml") == DEFAULTS
