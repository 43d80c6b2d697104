from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one experiment; ``passed`` is the conjunction of its asserted inequalities."""

    name: str
    quantities: Dict[str, float]
    passed: bool
    tolerance: float
    details: str = ""
    series: Dict[str, List[float]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "name": self.name,
            "quantities": {k: float(v) for k, v in self.quantities.items()},
            "passed": bool(self.passed),
            "tolerance": float(self.tolerance),
            "details": self.details,
        }
        if self.series:
            out["series"] = {k: [float(x) for x in v] for k, v in self.series.items()}
        return out


def reports_payload(reports: Union[ExperimentReport, Iterable[ExperimentReport]]) -> Dict[str, Any]:
    if isinstance(reports, ExperimentReport):
        return reports.to_dict()
    items = [r.to_dict() for r in reports]
    return {"passed": all(r["passed"] for r in items), "reports": items}


def write_report(reports: Union[ExperimentReport, Iterable[ExperimentReport]], path: Path) -> Path:
    """JSON with sorted keys and repr-exact floats; no timestamps so reruns compare byte for byte."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(reports_payload(reports), indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path
