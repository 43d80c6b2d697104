import json
import logging

from ctmdp.utils import logging_setup


def test_compute_retention_days_env(monkeypatch):
    monkeypatch.setenv("CTMDP_LOG_RETENTION_DAYS", "3")
    assert logging_setup._compute_retention_days() == 3
    monkeypatch.setenv("CTMDP_LOG_RETENTION_DAYS", "soon")
    assert logging_setup._compute_retention_days() == 7
    monkeypatch.setenv("CTMDP_LOG_RETENTION_DAYS", "9999")
    assert logging_setup._compute_retention_days() == 365


def test_log_event_respects_detail(monkeypatch, caplog):
    root = logging.getLogger()
    caplog.set_level(logging.INFO)
    monkeypatch.setattr(root, "_ctmdp_log_detail", False, raising=False)
    logging_setup.log_event(logging.getLogger("ctmdp.test"), "detail.test", "msg", big="x" * 1000, small="ok")
    assert "small='ok'" in caplog.text
    # big should be trimmed away when detail disabled
    assert "big=" not in caplog.text


def test_setup_logging_writes_text_and_jsonl(tmp_path, monkeypatch):
    monkeypatch.setattr(logging_setup, "_ROOT_CONFIGURED", False)
    monkeypatch.setattr(logging_setup, "_ROOT_LOG_DIR", None)
    root = logging.getLogger()
    try:
        logger = logging_setup.setup_logging(tmp_path)
        logging_setup.log_event(logger, "unit.event", "hello", value=1.5)
        for handler in root.handlers:
            handler.flush()
        text = (tmp_path / "ctmdp.log").read_text(encoding="utf-8")
        assert "hello | value=1.5" in text
        lines = (tmp_path / "ctmdp_runs.jsonl").read_text(encoding="utf-8").splitlines()
        events = [json.loads(line)["event_name"] for line in lines]
        assert events[0] == "logging.start"
        assert "unit.event" in events
    finally:
        logging_setup._remove_owned_handlers(root)
