"""Type-aware normalization and the conservative contract/drift predicate."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from driftmon.model import (
    ContractRecord,
    ContractType,
    DriftEvent,
    DriftmonError,
    MatchLevel,
    Role,
    compatible,
)

STOPLIST = frozenset(
    {"http", "https", "www", "com", "org", "io", "net", "api", "the", "a", "an", "latest"}
)
# name-headed types: a single package/tool/image identifier is meaningful
VERSION_BEARING = frozenset(
    {
        ContractType.DEPENDENCY,
        ContractType.CONTAINER_IMAGE,
        ContractType.CI_ACTION,
        ContractType.TOOL_AVAILABILITY,
    }
)
URL_LIKE = frozenset({ContractType.SERVICE_URL, ContractType.API_ENDPOINT})
# the identifier is the image/action name, not its namespace owner
_TAIL_HEADED = frozenset({ContractType.CONTAINER_IMAGE, ContractType.CI_ACTION})

_SURROUNDING = "\"'`()<>[],;"
_BASE_SEPARATORS = "/-_.:@= \t\n<>!~^,?&#{}*+|"
_NAME_SEPARATORS = _BASE_SEPARATORS.replace("-", "").replace("_", "")
_PROTOCOL = re.compile(r"^https?://", re.I)
_VERSION_TOKEN = re.compile(r"^v?\d")


def separators_for(ct: ContractType) -> str:
    return _NAME_SEPARATORS if ct in VERSION_BEARING else _BASE_SEPARATORS


def is_version_token(token: str) -> bool:
    return bool(_VERSION_TOKEN.match(token))


@dataclass(frozen=True)
class NormalizedValue:
    canonical: str
    tokens: tuple[str, ...]
    head: str


@dataclass(frozen=True)
class MatchResult:
    matched: bool
    level: MatchLevel | None = None
    shared_tokens: tuple[str, ...] = field(default_factory=tuple)


NO_MATCH = MatchResult(False)


def _canonical(ct: ContractType, value: str) -> str:
    text = value
    while True:
        before = text
        text = text.strip().strip(_SURROUNDING)
        if ct in URL_LIKE:
            text = _PROTOCOL.sub("", text)
        if ct is ContractType.ENV_VARIABLE:
            text = text.lstrip("$")
            if text.startswith("{") and text.endswith("}"):
                text = text[1:-1]
        else:
            text = text.lower()
        text = re.sub(r"/{2,}", "/", text).rstrip("/")
        if text == before:
            return text


def normalize(ct: ContractType, value: str) -> NormalizedValue:
    if not value or not value.strip():
        raise DriftmonError("EMPTY_VALUE")
    canonical = _canonical(ct, value)
    if not canonical:
        raise DriftmonError("EMPTY_VALUE", value)
    pieces = re.split("[" + re.escape(separators_for(ct)) + "]+", canonical)
    tokens = []
    for tok in pieces:
        if not tok or tok.lower() in STOPLIST:
            continue
        if is_version_token(tok):
            if ct in VERSION_BEARING:
                tokens.append(tok)
            continue
        if len(tok) >= 2:
            tokens.append(tok)
    identifiers = [t for t in tokens if not is_version_token(t)]
    if not identifiers:
        head = ""
    elif ct in _TAIL_HEADED:
        head = identifiers[-1]
    else:
        head = identifiers[0]
    return NormalizedValue(canonical, tuple(tokens), head)


def _aligned_at(longer: str, shorter: str, i: int, seps: str) -> bool:
    j = i + len(shorter)
    if i > 0:
        left = longer[i - 1]
        if left not in seps:
            return False
        if left == "." and i >= 2 and longer[i - 2].isdigit() and shorter[0].isdigit():
            return False
    if j < len(longer):
        right = longer[j]
        if right not in seps:
            return False
        if right == "." and j + 1 < len(longer) and longer[j + 1].isdigit() and shorter[-1].isdigit():
            return False
    return True


def aligned_substring(a: NormalizedValue, b: NormalizedValue, ct: ContractType) -> bool:
    """True if the shorter canonical sits inside the longer on separator boundaries."""
    if a.canonical == b.canonical:
        return True
    shorter, longer = sorted((a, b), key=lambda v: len(v.canonical))
    if not shorter.tokens:
        return False
    seps = separators_for(ct)
    i = longer.canonical.find(shorter.canonical)
    while i >= 0:
        if _aligned_at(longer.canonical, shorter.canonical, i, seps):
            return True
        i = longer.canonical.find(shorter.canonical, i + 1)
    return False


def match(c: ContractRecord, d: DriftEvent) -> MatchResult:
    """Role gate, then type gate, then EXACT / TOK2 / TYPED1 (first rule wins)."""
    if c.role is not Role.OPERATIONAL:
        return NO_MATCH
    if not compatible(c.contract_type, d.drift_type):
        return NO_MATCH
    try:
        v = normalize(c.contract_type, c.value)
        o = normalize(c.contract_type, d.old_value)
    except DriftmonError:
        return NO_MATCH
    shared = tuple(t for t in v.tokens if t in set(o.tokens))
    shared = tuple(dict.fromkeys(shared))
    if aligned_substring(v, o, c.contract_type):
        return MatchResult(True, MatchLevel.EXACT, shared)
    if len(shared) >= 2 and any(not is_version_token(t) for t in shared):
        return MatchResult(True, MatchLevel.TOK2, shared)
    if (
        len(shared) == 1
        and c.contract_type in VERSION_BEARING
        and v.head
        and shared[0] == v.head == o.head
    ):
        return MatchResult(True, MatchLevel.TYPED1, shared)
    return MatchResult(False, None, shared)
