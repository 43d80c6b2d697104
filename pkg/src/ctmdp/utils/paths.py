from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional


def _repo_root() -> Path:
    # src/ctmdp/utils/paths.py -> repo root is three parents up
    return Path(__file__).resolve().parents[3]


def default_log_dir() -> Path:
    # Keep logs inside repo root/LOG by default.
    return _repo_root() / "LOG"


def default_out_dir() -> Path:
    return Path.cwd() / "ctmdp_out"


@dataclass(frozen=True)
class RunPaths:
    log_dir: Path
    out_dir: Path


def ensure_dirs(*paths: Path) -> None:
    for p in paths:
        p.mkdir(parents=True, exist_ok=True)


def resolve_run_paths(log_dir: Optional[str], out_dir: Optional[str]) -> RunPaths:
    ld = Path(log_dir) if log_dir else default_log_dir()
    od = Path(out_dir) if out_dir else default_out_dir()
    ensure_dirs(ld)
    return RunPaths(log_dir=ld, out_dir=od)
