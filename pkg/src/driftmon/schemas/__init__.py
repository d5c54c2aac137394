"""JSON schemas for every document the tool reads or writes."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from driftmon.model import DriftmonError

SCHEMA_NAMES = (
    "drifts",
    "corpus",
    "extract_report",
    "check_report",
    "verifier_result",
    "repair_report",
    "metrics",
)


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMA_NAMES:
        raise KeyError(name)
    text = resources.files(__name__).joinpath(f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_payload(name: str, payload) -> None:
    """Raise SCHEMA_VIOLATION when ``payload`` does not fit schema ``name``."""
    try:
        jsonschema.validate(payload, load_schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path)
        case = ""
        if name == "corpus" and exc.absolute_path and isinstance(payload, list):
            idx = exc.absolute_path[0]
            if isinstance(idx, int) and isinstance(payload[idx], dict):
                case = f"{payload[idx].get('case_id', idx)}: "
        raise DriftmonError("SCHEMA_VIOLATION", f"{case}{where or '<root>'}: {exc.message}") from None
