"""Domain types shared by every stage of the pipeline.

All spans are half-open byte offsets into the UTF-8 encoding of a document.
JSON field names match the attribute names below; enums serialize by name.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Mapping


class DriftmonError(ValueError):
    """Input or contract error carrying a stable machine-readable code."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}({detail})" if detail else code)


class _NamedEnum(str, Enum):
    @classmethod
    def parse(cls, name: Any, *, error_code: str = "UNKNOWN_ENUM"):
        if isinstance(name, cls):
            return name
        try:
            return cls[name]
        except (KeyError, TypeError):
            raise DriftmonError(error_code, str(name)) from None

    def __str__(self) -> str:
        return self.name


class ContractType(_NamedEnum):
    DEPENDENCY = "DEPENDENCY"
    SERVICE_URL = "SERVICE_URL"
    API_ENDPOINT = "API_ENDPOINT"
    CONFIGURATION = "CONFIGURATION"
    SCHEMA_FIELD = "SCHEMA_FIELD"
    AUTHENTICATION = "AUTHENTICATION"
    ENV_VARIABLE = "ENV_VARIABLE"
    CONTAINER_IMAGE = "CONTAINER_IMAGE"
    CI_ACTION = "CI_ACTION"
    CLOUD_RESOURCE = "CLOUD_RESOURCE"
    CLI_INTERFACE = "CLI_INTERFACE"
    TOOL_AVAILABILITY = "TOOL_AVAILABILITY"


class DriftType(_NamedEnum):
    URL_CHANGE = "URL_CHANGE"
    VERSION_BUMP = "VERSION_BUMP"
    CONFIG_CHANGE = "CONFIG_CHANGE"
    API_MIGRATION = "API_MIGRATION"
    DEPRECATION = "DEPRECATION"
    SCHEMA_CHANGE = "SCHEMA_CHANGE"
    AUTH_CHANGE = "AUTH_CHANGE"
    DEPENDENCY_UPDATE = "DEPENDENCY_UPDATE"


class Role(_NamedEnum):
    OPERATIONAL = "OPERATIONAL"
    INCIDENTAL = "INCIDENTAL"


class Origin(_NamedEnum):
    REGEX = "REGEX"
    SEMANTIC = "SEMANTIC"
    MERGED = "MERGED"


class ContextKind(_NamedEnum):
    CODE_FENCE = "CODE_FENCE"
    INLINE_CODE = "INLINE_CODE"
    PROSE = "PROSE"
    COMMENT = "COMMENT"
    BADGE_OR_IMAGE = "BADGE_OR_IMAGE"
    LINK_LABEL = "LINK_LABEL"
    HEADING = "HEADING"


class EvidenceKind(_NamedEnum):
    KNOWN_DRIFT = "KNOWN_DRIFT"
    LIVE_URL = "LIVE_URL"
    LIVE_REGISTRY = "LIVE_REGISTRY"


class MatchLevel(_NamedEnum):
    EXACT = "EXACT"
    TOK2 = "TOK2"
    TYPED1 = "TYPED1"
    LIVE_HARD = "LIVE_HARD"


class Split(_NamedEnum):
    CONTROLLED_DRIFT = "CONTROLLED_DRIFT"
    REAL_WORLD_DRIFT = "REAL_WORLD_DRIFT"
    IDENTITY = "IDENTITY"
    FORMATTING_NEG = "FORMATTING_NEG"
    SEMANTIC_NEG = "SEMANTIC_NEG"


POSITIVE_SPLITS = frozenset({Split.CONTROLLED_DRIFT, Split.REAL_WORLD_DRIFT})
NEGATIVE_ONLY_SPLITS = frozenset({Split.IDENTITY, Split.FORMATTING_NEG})


_COMPATIBLE: dict[ContractType, frozenset[DriftType]] = {
    ContractType.DEPENDENCY: frozenset(
        {DriftType.VERSION_BUMP, DriftType.DEPENDENCY_UPDATE, DriftType.DEPRECATION}
    ),
    ContractType.SERVICE_URL: frozenset({DriftType.URL_CHANGE, DriftType.DEPRECATION}),
    ContractType.API_ENDPOINT: frozenset(
        {
            DriftType.URL_CHANGE,
            DriftType.API_MIGRATION,
            DriftType.DEPRECATION,
            DriftType.SCHEMA_CHANGE,
        }
    ),
    ContractType.CONFIGURATION: frozenset({DriftType.CONFIG_CHANGE, DriftType.DEPRECATION}),
    ContractType.SCHEMA_FIELD: frozenset({DriftType.SCHEMA_CHANGE, DriftType.API_MIGRATION}),
    ContractType.AUTHENTICATION: frozenset({DriftType.AUTH_CHANGE, DriftType.API_MIGRATION}),
    ContractType.ENV_VARIABLE: frozenset({DriftType.CONFIG_CHANGE, DriftType.AUTH_CHANGE}),
    ContractType.CONTAINER_IMAGE: frozenset(
        {DriftType.VERSION_BUMP, DriftType.DEPENDENCY_UPDATE, DriftType.DEPRECATION}
    ),
    ContractType.CI_ACTION: frozenset(
        {DriftType.VERSION_BUMP, DriftType.DEPENDENCY_UPDATE, DriftType.DEPRECATION}
    ),
    ContractType.CLOUD_RESOURCE: frozenset({DriftType.CONFIG_CHANGE, DriftType.URL_CHANGE}),
    ContractType.CLI_INTERFACE: frozenset(
        {DriftType.DEPRECATION, DriftType.API_MIGRATION, DriftType.CONFIG_CHANGE}
    ),
    ContractType.TOOL_AVAILABILITY: frozenset({DriftType.DEPRECATION, DriftType.VERSION_BUMP}),
}


def compatible(ct: ContractType, dt: DriftType) -> bool:
    """Type gate: can a drift of kind ``dt`` invalidate a contract of kind ``ct``?"""
    return dt in _COMPATIBLE[ct]


# ---------------------------------------------------------------------------
# Documents and spans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start <= self.end):
            raise DriftmonError("INVALID_SPAN", f"{self.start}..{self.end}")

    def to_list(self) -> list[int]:
        return [self.start, self.end]

    @classmethod
    def from_json(cls, raw: Any) -> "Span":
        if isinstance(raw, Mapping):
            return cls(int(raw["start"]), int(raw["end"]))
        start, end = raw
        return cls(int(start), int(end))


@dataclass(frozen=True)
class SkillDocument:
    id: str
    text: str
    source_path: str = ""
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise DriftmonError("MISSING_FIELD", "id")
        if not isinstance(self.text, str):
            raise DriftmonError("INVALID_TEXT", self.id)

    @cached_property
    def encoded(self) -> bytes:
        return self.text.encode("utf-8")

    @property
    def byte_length(self) -> int:
        return len(self.encoded)

    @cached_property
    def _multibyte(self) -> tuple[list[int], list[int]]:
        # char positions of non-ASCII chars and cumulative extra bytes after each
        positions, extra = [], []
        total = 0
        for i, ch in enumerate(self.text):
            if ord(ch) > 0x7F:
                total += len(ch.encode("utf-8")) - 1
                positions.append(i)
                extra.append(total)
        return positions, extra

    def to_byte(self, char_index: int) -> int:
        positions, extra = self._multibyte
        k = bisect_right(positions, char_index - 1)
        return char_index + (extra[k - 1] if k else 0)

    def to_char(self, byte_index: int) -> int:
        return len(self.encoded[:byte_index].decode("utf-8", errors="ignore"))

    def byte_span(self, char_start: int, char_end: int) -> Span:
        return Span(self.to_byte(char_start), self.to_byte(char_end))

    def slice(self, span: Span) -> str:
        if span.end > self.byte_length:
            raise DriftmonError("SPAN_OUT_OF_RANGE", f"{span.start}..{span.end}")
        return self.encoded[span.start : span.end].decode("utf-8")

    def line_of(self, byte_index: int) -> int:
        return self.encoded.count(b"\n", 0, byte_index) + 1

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_path": self.source_path,
            "text": self.text,
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class Evidence:
    span: Span
    text: str

    def to_dict(self) -> dict:
        return {"span": self.span.to_list(), "text": self.text}

    @classmethod
    def from_json(cls, raw: Mapping) -> "Evidence":
        return cls(Span.from_json(raw["span"]), str(raw.get("text", "")))


@dataclass(frozen=True)
class Mention:
    family: Any  # extract.PatternFamily; typed loosely to avoid an import cycle
    raw: str
    value: str
    span: Span
    line: int
    context: ContextKind

    def to_dict(self) -> dict:
        return {
            "family": str(self.family),
            "raw": self.raw,
            "value": self.value,
            "span": self.span.to_list(),
            "line": self.line,
            "context": self.context.name,
        }


@dataclass(frozen=True)
class ContractRecord:
    id: str
    contract_type: ContractType
    role: Role
    value: str
    evidence: Evidence
    origin: Origin
    skill_id: str

    def __post_init__(self):
        if not self.value:
            raise DriftmonError("EMPTY_VALUE", self.id)

    @property
    def operational(self) -> bool:
        return self.role is Role.OPERATIONAL

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "contract_type": self.contract_type.name,
            "role": self.role.name,
            "value": self.value,
            "evidence": self.evidence.to_dict(),
            "origin": self.origin.name,
            "skill_id": self.skill_id,
        }

    @classmethod
    def from_json(cls, raw: Mapping) -> "ContractRecord":
        missing = [
            k for k in ("id", "contract_type", "role", "value", "evidence") if k not in raw
        ]
        if missing:
            raise DriftmonError("MISSING_FIELD", missing[0])
        return cls(
            id=str(raw["id"]),
            contract_type=ContractType.parse(
                raw["contract_type"], error_code="UNKNOWN_CONTRACT_TYPE"
            ),
            role=Role.parse(raw["role"], error_code="UNKNOWN_ROLE"),
            value=str(raw["value"]),
            evidence=Evidence.from_json(raw["evidence"]),
            origin=Origin.parse(raw.get("origin", "SEMANTIC"), error_code="UNKNOWN_ORIGIN"),
            skill_id=str(raw.get("skill_id", "")),
        )


@dataclass(frozen=True)
class DriftEvent:
    drift_type: DriftType
    old_value: str
    new_value: str | None = None
    source: str = "manual"
    observed_at: str | None = None

    def __post_init__(self):
        if not self.old_value:
            raise DriftmonError("MISSING_FIELD", "old_value")
        if not self.source:
            raise DriftmonError("MISSING_FIELD", "source")

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "drift_type": self.drift_type.name,
            "old_value": self.old_value,
            "new_value": self.new_value,
            "source": self.source,
        }
        if self.observed_at is not None:
            out["observed_at"] = self.observed_at
        return out

    @classmethod
    def from_json(cls, raw: Any) -> "DriftEvent":
        if not isinstance(raw, Mapping):
            raise DriftmonError("MALFORMED_JSON", "drift event must be an object")
        for key in ("drift_type", "old_value", "source"):
            if raw.get(key) in (None, ""):
                raise DriftmonError("MISSING_FIELD", key)
        new_value = raw.get("new_value")
        return cls(
            drift_type=DriftType.parse(raw["drift_type"], error_code="UNKNOWN_DRIFT_TYPE"),
            old_value=str(raw["old_value"]),
            new_value=None if new_value is None else str(new_value),
            source=str(raw["source"]),
            observed_at=raw.get("observed_at"),
        )


def parse_drift_events(json_text: str) -> list[DriftEvent]:
    """Parse a ``drifts.json`` payload, preserving file order."""
    try:
        payload = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise DriftmonError("MALFORMED_JSON", str(exc)) from None
    if not isinstance(payload, list):
        raise DriftmonError("MALFORMED_JSON", "expected a JSON array of drift events")
    return [DriftEvent.from_json(item) for item in payload]


@dataclass(frozen=True)
class Violation:
    """A matched (contract, evidence) pair.

    ``contract`` is kept on the object so the role invariant can be checked at
    construction time; serialization only writes ``contract_id``.
    """

    contract: ContractRecord
    evidence_kind: EvidenceKind
    match_level: MatchLevel
    explanation: str
    drift: DriftEvent | None = None
    live_evidence: Any = None  # live.LiveEvidence

    def __post_init__(self):
        if self.contract.role is not Role.OPERATIONAL:
            raise DriftmonError("INCIDENTAL_VIOLATION", self.contract.id)
        if (self.drift is None) == (self.live_evidence is None):
            raise DriftmonError(
                "INVALID_VIOLATION", "exactly one of drift/live_evidence is required"
            )
        if (self.evidence_kind is EvidenceKind.KNOWN_DRIFT) != (self.drift is not None):
            raise DriftmonError("INVALID_VIOLATION", "evidence_kind does not match payload")

    @property
    def contract_id(self) -> str:
        return self.contract.id

    def to_dict(self) -> dict:
        return {
            "contract_id": self.contract_id,
            "evidence_kind": self.evidence_kind.name,
            "drift": self.drift.to_dict() if self.drift else None,
            "live_evidence": self.live_evidence.to_dict() if self.live_evidence else None,
            "match_level": self.match_level.name,
            "explanation": self.explanation,
        }


@dataclass(frozen=True)
class BenchCase:
    case_id: str
    split: Split
    skill: SkillDocument
    drift_events: tuple[DriftEvent, ...] = ()
    label: bool = False
    drift_type: DriftType | None = None
    semantic_records: tuple[ContractRecord, ...] = ()
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.split in NEGATIVE_ONLY_SPLITS and self.label:
            raise DriftmonError("SCHEMA_VIOLATION", f"{self.case_id}: {self.split.name} must be label=false")
        if self.split in POSITIVE_SPLITS:
            if not self.label:
                raise DriftmonError("SCHEMA_VIOLATION", f"{self.case_id}: {self.split.name} must be label=true")
            if not self.drift_events:
                raise DriftmonError("SCHEMA_VIOLATION", f"{self.case_id}: drift split without events")

    def to_dict(self, *, inline_text: bool = True) -> dict:
        skill: dict[str, Any] = {"id": self.skill.id}
        if inline_text or not self.skill.source_path:
            skill["text"] = self.skill.text
        else:
            skill["path"] = self.skill.source_path
        if self.skill.metadata:
            skill["metadata"] = dict(self.skill.metadata)
        out: dict[str, Any] = {
            "case_id": self.case_id,
            "split": self.split.name,
            "skill": skill,
            "drift_events": [d.to_dict() for d in self.drift_events],
            "label": self.label,
            "drift_type": self.drift_type.name if self.drift_type else None,
        }
        if self.semantic_records:
            # same shape the corpus loader accepts
            out["semantic_records"] = [
                {
                    "contract_type": r.contract_type.name,
                    "value": r.value,
                    "quote": r.evidence.text,
                    "role": r.role.name,
                }
                for r in self.semantic_records
            ]
        if self.metadata:
            out["metadata"] = dict(self.metadata)
        return out


def dump_json(payload: Any) -> str:
    """Canonical JSON used for every file the tool writes."""
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
