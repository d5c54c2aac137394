"""Role decision (OPERATIONAL vs INCIDENTAL) and contract formation."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from driftmon.extract import Mode, PatternFamily, extract_mentions
from driftmon.matcher import normalize
from driftmon.model import (
    ContextKind,
    ContractRecord,
    ContractType,
    DriftmonError,
    Evidence,
    Mention,
    Origin,
    Role,
    SkillDocument,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

DEFAULT_CUES = (
    "see",
    "see also",
    "docs",
    "documentation",
    "tutorial",
    "example of",
    "e.g.",
    "for reference",
    "changelog",
    "blog",
)

INCIDENTAL_CONTEXTS = frozenset(
    {ContextKind.BADGE_OR_IMAGE, ContextKind.LINK_LABEL, ContextKind.HEADING, ContextKind.COMMENT}
)
CODE_CONTEXTS = frozenset({ContextKind.CODE_FENCE, ContextKind.INLINE_CODE})
OPERATIONAL_FAMILIES = frozenset(
    {
        PatternFamily.VERSION_CONSTRAINT,
        PatternFamily.IMPORT,
        PatternFamily.DOCKER_IMAGE,
        PatternFamily.DOCKER_IMAGE_TAGGED,
        PatternFamily.GITHUB_ACTION,
        PatternFamily.NPM_AT_VERSION,
        PatternFamily.ENV_VAR,
    }
)

FAMILY_CONTRACT_TYPE: dict[PatternFamily, ContractType] = {
    PatternFamily.URL: ContractType.SERVICE_URL,
    PatternFamily.API_PATH: ContractType.API_ENDPOINT,
    PatternFamily.VERSION_CONSTRAINT: ContractType.DEPENDENCY,
    PatternFamily.IMPORT: ContractType.DEPENDENCY,
    PatternFamily.NPM_AT_VERSION: ContractType.DEPENDENCY,
    PatternFamily.BARE_SEMVER: ContractType.DEPENDENCY,
    PatternFamily.AUTH_PATTERN: ContractType.AUTHENTICATION,
    PatternFamily.DOCKER_IMAGE: ContractType.CONTAINER_IMAGE,
    PatternFamily.DOCKER_IMAGE_TAGGED: ContractType.CONTAINER_IMAGE,
    PatternFamily.GITHUB_ACTION: ContractType.CI_ACTION,
    PatternFamily.ENV_VAR: ContractType.ENV_VARIABLE,
    PatternFamily.CLOUD_REGION: ContractType.CLOUD_RESOURCE,
    PatternFamily.CLI_FLAG: ContractType.CLI_INTERFACE,
    PatternFamily.CONFIG_FILENAME: ContractType.CONFIGURATION,
    PatternFamily.GIT_BRANCH: ContractType.CONFIGURATION,
}


@dataclass(frozen=True)
class ClassifierConfig:
    cues: tuple[str, ...] = DEFAULT_CUES
    window: int = 5
    ambiguous_default: Role = Role.INCIDENTAL

    @classmethod
    def from_mapping(cls, raw: dict) -> "ClassifierConfig":
        section = raw.get("classifier", raw)
        cfg = cls()
        if "cues" in section:
            cfg = replace(cfg, cues=tuple(str(c).lower() for c in section["cues"]))
        if "window" in section:
            cfg = replace(cfg, window=int(section["window"]))
        if "ambiguous_default" in section:
            cfg = replace(
                cfg,
                ambiguous_default=Role.parse(section["ambiguous_default"], error_code="UNKNOWN_ROLE"),
            )
        return cfg


def load_config(path: str | Path) -> dict:
    """Read a ``driftmon.toml`` (or JSON) file into a plain mapping."""
    path = Path(path)
    data = path.read_bytes()
    if path.suffix == ".json":
        return json.loads(data.decode("utf-8"))
    return tomllib.loads(data.decode("utf-8"))


# ---------------------------------------------------------------------------
# Role decision
# ---------------------------------------------------------------------------

_SENTENCE_BREAK = re.compile(
    r"(?<!\be\.g)(?<!\bi\.e)[.!?](?=\s)|\n[ \t]*\n|\n[ \t]*(?:[-*+>]|\d+\.)[ \t]|\n[ \t]*#|\|"
)
_WORD = re.compile(r"[A-Za-z][A-Za-z.]*")


def preceding_words(text: str, char_start: int, window: int) -> list[str]:
    """Lower-cased words of the current sentence just before ``char_start``."""
    chunk = text[max(0, char_start - 400):char_start]
    breaks = [m.end() for m in _SENTENCE_BREAK.finditer(chunk)]
    if breaks:
        chunk = chunk[breaks[-1]:]
    words = []
    for w in _WORD.findall(chunk):
        w = w.lower()
        words.append(w if w == "e.g." else w.rstrip("."))
    return words[-window:] if window > 0 else []


def cue_fires(words: Sequence[str], cues: Iterable[str]) -> bool:
    joined = " " + " ".join(words) + " "
    return any(f" {cue} " in joined for cue in cues)


def assign_role(
    mention: Mention,
    doc: SkillDocument | None = None,
    config: ClassifierConfig = ClassifierConfig(),
) -> Role:
    """Heuristic role for one mention.

    Citation cues are looked up in ``doc`` when it is given; without the
    document only the context and family rules apply.
    """
    if mention.context in INCIDENTAL_CONTEXTS:
        return Role.INCIDENTAL
    if doc is not None and mention.context is not ContextKind.CODE_FENCE:
        start = doc.to_char(mention.span.start)
        if cue_fires(preceding_words(doc.text, start, config.window), config.cues):
            return Role.INCIDENTAL
    if mention.context in CODE_CONTEXTS:
        return Role.OPERATIONAL
    if mention.family in OPERATIONAL_FAMILIES:
        return Role.OPERATIONAL
    return config.ambiguous_default


# ---------------------------------------------------------------------------
# Contract formation
# ---------------------------------------------------------------------------


class SemanticExtractor(Protocol):
    def extract(self, doc: SkillDocument) -> list[ContractRecord]: ...


class NullSemanticExtractor:
    """Default semantic pass: contributes nothing."""

    def extract(self, doc: SkillDocument) -> list[ContractRecord]:
        return []


class StaticSemanticExtractor:
    """Replays pre-recorded semantic records keyed by skill id."""

    def __init__(self, records: dict[str, Sequence[ContractRecord]] | None = None):
        self.records = {k: list(v) for k, v in (records or {}).items()}

    def extract(self, doc: SkillDocument) -> list[ContractRecord]:
        return list(self.records.get(doc.id, []))


def contract_id(skill_id: str, ct: ContractType, canonical: str) -> str:
    digest = hashlib.sha1(f"{skill_id}\x00{ct.name}\x00{canonical}".encode("utf-8")).hexdigest()
    return f"{ct.name.lower()}-{digest[:10]}"


def semantic_record(
    doc: SkillDocument,
    contract_type: ContractType | str,
    value: str,
    quote: str,
    role: Role | str = Role.OPERATIONAL,
) -> ContractRecord:
    """Build a SEMANTIC record whose evidence is the first occurrence of ``quote``."""
    ct = ContractType.parse(contract_type, error_code="UNKNOWN_CONTRACT_TYPE")
    at = doc.text.find(quote)
    if at < 0 or not quote:
        raise DriftmonError("EVIDENCE_OUT_OF_RANGE", f"{doc.id}: quote not found: {quote!r}")
    span = doc.byte_span(at, at + len(quote))
    return ContractRecord(
        id=contract_id(doc.id, ct, normalize(ct, value).canonical),
        contract_type=ct,
        role=Role.parse(role, error_code="UNKNOWN_ROLE"),
        value=value,
        evidence=Evidence(span, quote),
        origin=Origin.SEMANTIC,
        skill_id=doc.id,
    )


def form_contracts(
    doc: SkillDocument,
    mentions: Sequence[Mention],
    semantic: Sequence[ContractRecord] = (),
    config: ClassifierConfig = ClassifierConfig(),
) -> list[ContractRecord]:
    """Turn mentions plus semantic records into the deduplicated contract set."""
    candidates: list[ContractRecord] = []
    for m in mentions:
        ct = FAMILY_CONTRACT_TYPE[m.family]
        candidates.append(
            ContractRecord(
                id="",
                contract_type=ct,
                role=assign_role(m, doc, config),
                value=m.value,
                evidence=Evidence(m.span, m.raw),
                origin=Origin.REGEX,
                skill_id=doc.id,
            )
        )
    for rec in semantic:
        if rec.evidence.span.end > doc.byte_length:
            raise DriftmonError("EVIDENCE_OUT_OF_RANGE", rec.id or rec.value)
        candidates.append(replace(rec, origin=Origin.SEMANTIC, skill_id=doc.id))

    groups: dict[tuple[ContractType, str], list[ContractRecord]] = {}
    for rec in candidates:
        try:
            key = (rec.contract_type, normalize(rec.contract_type, rec.value).canonical)
        except DriftmonError:
            continue
        groups.setdefault(key, []).append(rec)

    contracts = []
    for (ct, canonical), members in groups.items():
        first = min(members, key=lambda r: (r.evidence.span.start, r.evidence.span.end))
        role = (
            Role.OPERATIONAL
            if any(r.role is Role.OPERATIONAL for r in members)
            else Role.INCIDENTAL
        )
        origin = Origin.MERGED if len(members) > 1 else first.origin
        contracts.append(
            replace(first, id=contract_id(doc.id, ct, canonical), role=role, origin=origin)
        )
    contracts.sort(key=lambda r: (r.evidence.span.start, r.id))
    return contracts


def extract_contracts(
    doc: SkillDocument,
    mode: Mode | str = Mode.FULL15,
    semantic: SemanticExtractor | None = None,
    config: ClassifierConfig = ClassifierConfig(),
) -> list[ContractRecord]:
    """Mentions, semantic pass and merge in one call."""
    mentions = extract_mentions(doc, mode)
    records = (semantic or NullSemanticExtractor()).extract(doc)
    return form_contracts(doc, mentions, records, config)

