from __future__ import annotations

import json
from pathlib import Path
from typing import List

import pandas as pd
import pytest

from ctmdp.cli.app import EXIT_FAILED, EXIT_MALFORMED, EXIT_OK, build_parser, main
from ctmdp.cli.demo import demo_model
from ctmdp.hjb import TimeGrid, solve_backward
from ctmdp.model import load_model, model_to_dict, save_model
from ctmdp.policy import PathSegment, feedback_from_value, load_policy


def _argv(tmp_path: Path, *rest: str) -> List[str]:
    return ["--config", str(tmp_path / "absent.yaml"), "--log-dir", str(tmp_path / "LOG"), *rest]


def _demo_file(tmp_path: Path, n_states: int = 10) -> Path:
    target = tmp_path / "model.json"
    save_model(demo_model(n_states=n_states), target)
    return target


def _policy_file(tmp_path: Path) -> Path:
    target = tmp_path / "policy.json"
    target.write_text(json.dumps({"kind": "delayed", "m": 1, "r0": 0.1, "builtin": "random", "params": {"seed": 3}}))
    return target


def test_parser_requires_a_subcommand() -> None:
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_validate_demo_model(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "report.json"
    code = main(_argv(tmp_path, "validate", "--model", str(_demo_file(tmp_path)), "--out", str(out)))
    assert code == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["M"] == 3.0
    assert printed["H1_pass"] and printed["H2_pass"] and printed["H3_pass"]
    assert json.loads(out.read_text(encoding="utf-8")) == printed
    assert (tmp_path / "LOG" / "ctmdp_runs.jsonl").exists()


def test_validate_flags_understated_bounds(tmp_path: Path) -> None:
    data = model_to_dict(demo_model(n_states=4))
    data["bounds"]["C1"] = 0.01
    target = tmp_path / "low.json"
    target.write_text(json.dumps(data), encoding="utf-8")
    assert main(_argv(tmp_path, "validate", "--model", str(target))) == EXIT_FAILED


def test_malformed_inputs_exit_with_2(tmp_path: Path) -> None:
    assert main(_argv(tmp_path, "validate", "--model", str(tmp_path / "missing.json"))) == EXIT_MALFORMED

    data = model_to_dict(demo_model(n_states=3))
    data["colour"] = "blue"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data), encoding="utf-8")
    assert main(_argv(tmp_path, "validate", "--model", str(bad))) == EXIT_MALFORMED

    model = str(_demo_file(tmp_path))
    assert main(_argv(tmp_path, "solve", "--model", model, "--dt", "0.2", "--scheme", "euler")) == EXIT_MALFORMED
    assert main(_argv(tmp_path, "simulate", "--model", model, "--n", "1")) == EXIT_MALFORMED
    assert main(_argv(tmp_path, "simulate", "--model", model, "--dump-paths", "2")) == EXIT_MALFORMED
    assert main(_argv(tmp_path, "simulate", "--model", model, "--i", "11", "--n", "5", "--dt", "0.1")) == EXIT_MALFORMED


def test_solve_writes_value_table(tmp_path: Path) -> None:
    out = tmp_path / "value.csv"
    code = main(_argv(tmp_path, "solve", "--model", str(_demo_file(tmp_path)), "--dt", "0.1", "--out", str(out)))
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["t", "i", "V", "argmin_u"]
    assert len(frame) == 11 * 10
    last = frame[frame["t"] == 1.0]
    assert last["V"].tolist() == pytest.approx([0.2 * k for k in range(10)])


def test_simulate_with_policy_file_and_dump(tmp_path: Path) -> None:
    out = tmp_path / "estimate.csv"
    paths = tmp_path / "paths.csv"
    code = main(
        _argv(
            tmp_path, "simulate", "--model", str(_demo_file(tmp_path)), "--policy", str(_policy_file(tmp_path)),
            "--dt", "0.01", "--n", "50", "--seed", "4", "--i", "3",
            "--out", str(out), "--dump-paths", "2", "--trajectories", str(paths),
        )
    )
    assert code == EXIT_OK
    est = pd.read_csv(out)
    assert list(est.columns) == ["mean", "stderr", "n", "seed"]
    assert int(est["n"].iloc[0]) == 50
    assert int(est["seed"].iloc[0]) == 4
    dumped = pd.read_csv(paths)
    assert sorted(dumped["path_id"].unique().tolist()) == [0, 1]
    assert set(dumped["event"]) <= {"jump", "refresh"}


def test_simulate_output_ignores_thread_count(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    model = str(_demo_file(tmp_path))
    outputs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("CTMDP_THREADS", threads)
        out = tmp_path / f"estimate_{threads}.csv"
        args = _argv(tmp_path, "simulate", "--model", model, "--dt", "0.01", "--n", "120", "--seed", "8", "--out", str(out))
        assert main(args) == EXIT_OK
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_verify_lipschitz_report(tmp_path: Path) -> None:
    out = tmp_path / "lipschitz.json"
    code = main(
        _argv(tmp_path, "verify", "--model", str(_demo_file(tmp_path)), "--experiment", "lipschitz", "--dt", "0.01",
              "--out", str(out))
    )
    assert code == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["name"] == "lipschitz"
    assert report["passed"] is True
    assert report["quantities"]["bound"] == pytest.approx(13.8)


def test_verify_comparison_needs_no_model(tmp_path: Path) -> None:
    cfg = tmp_path / "config.yaml"
    cfg.write_text("verify:\n  comparison_instances: 2\n", encoding="utf-8")
    out = tmp_path / "comparison.json"
    code = main(
        ["--config", str(cfg), "--log-dir", str(tmp_path / "LOG"), "verify", "--experiment", "comparison",
         "--dt", "0.01", "--out", str(out)]
    )
    assert code == EXIT_OK
    assert json.loads(out.read_text(encoding="utf-8"))["quantities"]["n_instances"] == 2.0


def test_verify_other_experiments_need_a_model(tmp_path: Path) -> None:
    assert main(_argv(tmp_path, "verify", "--experiment", "oracle")) == EXIT_MALFORMED


def test_simulate_dumps_the_policy_in_effect(tmp_path: Path) -> None:
    model_path = _demo_file(tmp_path, n_states=3)
    from_file = tmp_path / "from_file.json"
    code = main(
        _argv(
            tmp_path, "simulate", "--model", str(model_path), "--policy", str(_policy_file(tmp_path)),
            "--dt", "0.1", "--n", "20", "--out", str(tmp_path / "a.csv"), "--dump-policy", str(from_file),
        )
    )
    assert code == EXIT_OK
    data = json.loads(from_file.read_text(encoding="utf-8"))
    assert data["kind"] == "delayed"
    assert (data["m"], data["r0"], data["s"]) == (1, 0.1, 0.0)
    assert data["params"] == {"seed": 3}

    feedback = tmp_path / "feedback.json"
    code = main(
        _argv(
            tmp_path, "simulate", "--model", str(model_path), "--dt", "0.1", "--n", "20",
            "--out", str(tmp_path / "b.csv"), "--dump-policy", str(feedback),
        )
    )
    assert code == EXIT_OK
    model = load_model(model_path)
    grid = TimeGrid.uniform(1.0, 0.1)
    back = load_policy(feedback, model, grid)
    expected = feedback_from_value(solve_backward(model, grid), model)
    assert back.kind == "feedback"
    for state in (1, 2, 3):
        path = PathSegment.constant(state, end=1.0)
        for t in (0.0, 0.45, 1.0):
            assert back.control_at(path, t).same_as(expected.control_at(path, t))
