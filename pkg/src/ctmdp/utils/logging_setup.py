from __future__ import annotations

import json
import logging
import os
import platform
import socket
import sys
import threading
import traceback
from datetime import datetime, timezone
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Any, Dict

from ctmdp.utils.run_context import get_run_fields

UTC = timezone.utc  # alias of datetime.UTC (3.11+)

_TRUTHY = {"1", "true", "TRUE", "True", "yes", "YES"}
_FALSY = {"0", "false", "False", "FALSE", "no", "NO"}

_ROOT_CONFIGURED = False
_ROOT_CONFIG_LOCK = threading.Lock()
_ROOT_LOG_DIR: Path | None = None


class RunContextFilter(logging.Filter):
    """Attach host metadata and the current run context to every log record."""

    def __init__(self) -> None:
        super().__init__()
        self._hostname = socket.gethostname()
        self._platform = platform.platform(terse=True)
        self._python = sys.version.split()[0]

    def filter(self, record: logging.LogRecord) -> bool:
        record.hostname = self._hostname
        record.platform = self._platform
        record.python = self._python
        try:
            record.run = get_run_fields()
        except Exception:
            record.run = None
        run = record.run or {}
        record.run_id = run.get("run_id") or "-"
        return True


class JsonLineFormatter(logging.Formatter):
    """Serialize record to JSONL."""

    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, tz=UTC).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "funcName": record.funcName,
            "line": record.lineno,
            "process": record.process,
            "thread": record.threadName,
            "hostname": getattr(record, "hostname", None),
            "platform": getattr(record, "platform", None),
            "python": getattr(record, "python", None),
            "event_name": getattr(record, "event_name", None),
        }
        payload["run"] = getattr(record, "run", None) or get_run_fields()

        extra_obj = getattr(record, "extra_payload", None)
        if extra_obj:
            payload["extra"] = extra_obj

        if record.exc_info:
            payload["exception"] = "".join(traceback.format_exception(*record.exc_info))

        return json.dumps(payload, ensure_ascii=False, default=str)


def _compute_retention_days() -> int:
    raw = str(os.environ.get("CTMDP_LOG_RETENTION_DAYS", "")).strip()
    try:
        val = int(raw) if raw else 7
    except ValueError:
        val = 7
    return max(1, min(val, 365))


def _remove_owned_handlers(root: logging.Logger) -> None:
    for handler in list(root.handlers):
        if not getattr(handler, "_ctmdp_owned", False):
            continue
        root.removeHandler(handler)
        try:
            handler.close()
        except Exception:
            pass


def _owned(handler: logging.Handler, fmt: logging.Formatter, flt: logging.Filter) -> logging.Handler:
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(fmt)
    handler.addFilter(flt)
    setattr(handler, "_ctmdp_owned", True)
    return handler


def setup_logging(log_dir: Path, name: str = "ctmdp") -> logging.Logger:
    """Configure text + JSONL run logs with daily rotation."""
    global _ROOT_CONFIGURED, _ROOT_LOG_DIR

    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    resolved = log_dir.resolve()
    logger = logging.getLogger(name)

    retention_days = _compute_retention_days()
    detail = str(os.environ.get("CTMDP_LOG_DETAIL", "1")).strip() not in _FALSY

    with _ROOT_CONFIG_LOCK:
        root = logging.getLogger()
        if not _ROOT_CONFIGURED or _ROOT_LOG_DIR != resolved:
            _remove_owned_handlers(root)
            root.setLevel(logging.DEBUG)

            fmt = logging.Formatter(
                "%(asctime)s.%(msecs)03d %(levelname)s "
                "pid=%(process)d tid=%(threadName)s run=%(run_id)s "
                "[%(name)s:%(funcName)s:%(lineno)d] %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )
            ctx_filter = RunContextFilter()

            for fname, formatter in (("ctmdp.log", fmt), ("ctmdp_runs.jsonl", JsonLineFormatter())):
                handler = TimedRotatingFileHandler(
                    str(log_dir / fname),
                    when="midnight",
                    backupCount=retention_days,
                    encoding="utf-8",
                    utc=True,
                )
                root.addHandler(_owned(handler, formatter, ctx_filter))

            if os.environ.get("CTMDP_LOG_CONSOLE", "").strip() in _TRUTHY:
                root.addHandler(_owned(logging.StreamHandler(), fmt, ctx_filter))

            _ROOT_CONFIGURED = True
            _ROOT_LOG_DIR = resolved

        setattr(root, "_ctmdp_log_detail", detail)

    logger.setLevel(logging.DEBUG)
    logger.propagate = True
    logging.captureWarnings(True)
    log_event(
        logger,
        "logging.start",
        "Logging initialized",
        log_dir=str(log_dir),
        retention_days=retention_days,
        detail=int(detail),
    )
    return logger


def log_event(logger: logging.Logger, event_name: str, message: str, **extra: Any) -> None:
    """
    Structured log helper:
    - adds event_name and extra_payload
    - appends key=value suffix to text log for readability
    """
    extra_payload: Dict[str, Any] = extra or {}
    detail_enabled = bool(getattr(logging.getLogger(), "_ctmdp_log_detail", True))

    if not detail_enabled:
        extra_payload = {k: v for k, v in extra_payload.items() if len(repr(v)) <= 400}

    suffix = ""
    if extra_payload:
        suffix = " | " + " ".join(f"{k}={extra_payload[k]!r}" for k in sorted(extra_payload))

    logger.info(
        f"{message}{suffix}",
        extra={
            "event_name": event_name,
            "extra_payload": extra_payload,
            "run": get_run_fields(),
        },
    )
