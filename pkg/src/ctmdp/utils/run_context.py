from __future__ import annotations

import contextvars
import uuid
from contextlib import contextmanager
from typing import Any, Dict, Iterator

# Context variables are per thread and per async task.
_FIELDS = ("run_id", "command", "experiment", "seed", "policy_id")
_VARS: Dict[str, contextvars.ContextVar] = {
    name: contextvars.ContextVar(name, default=None) for name in _FIELDS
}


def new_run_id() -> str:
    return str(uuid.uuid4())


def get_run_fields() -> Dict[str, Any]:
    """Current values of all run-context variables."""
    return {name: var.get() for name, var in _VARS.items()}


@contextmanager
def run_scope(**fields: Any) -> Iterator[None]:
    """Temporarily set run-context variables; previous values are restored on exit."""
    unknown = set(fields) - set(_FIELDS)
    if unknown:
        raise KeyError(f"unknown run-context fields: {sorted(unknown)}")
    tokens = {name: _VARS[name].set(value) for name, value in fields.items()}
    try:
        yield
    finally:
        for name, tok in tokens.items():
            try:
                _VARS[name].reset(tok)
            except ValueError:
                # token created in another context
                pass
