from __future__ import annotations

import json
from pathlib import Path

from ctmdp.verify import ExperimentReport, reports_payload, write_report


def _report(name: str, passed: bool) -> ExperimentReport:
    return ExperimentReport(
        name=name,
        quantities={"b": 2.0, "a": 0.1},
        passed=passed,
        tolerance=1e-3,
        series={"gaps": [0.5, 0.25]},
    )


def test_single_report_payload() -> None:
    payload = reports_payload(_report("lipschitz", True))
    assert payload["name"] == "lipschitz"
    assert payload["passed"] is True
    assert payload["series"] == {"gaps": [0.5, 0.25]}
    assert "series" not in ExperimentReport("x", {}, True, 0.0).to_dict()


def test_list_payload_passes_only_if_all_pass() -> None:
    payload = reports_payload([_report("a", True), _report("b", False)])
    assert payload["passed"] is False
    assert [r["name"] for r in payload["reports"]] == ["a", "b"]
    assert reports_payload([_report("a", True)])["passed"] is True


def test_write_report_is_byte_stable(tmp_path: Path) -> None:
    first = write_report(_report("oracle", True), tmp_path / "one" / "oracle.json")
    second = write_report(_report("oracle", True), tmp_path / "two" / "oracle.json")
    assert first.read_bytes() == second.read_bytes()
    text = first.read_text(encoding="utf-8")
    assert text.endswith("}\n")
    data = json.loads(text)
    assert list(data["quantities"]) == ["a", "b"]
    assert list(data) == sorted(data)
