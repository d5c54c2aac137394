"""Version parsing and constraint satisfaction for pip- and npm-style ranges.

Supported clause forms: ``== != >= <= > < ~= === ^ ~ =``, bare versions,
wildcards (``1.2.*``, ``1.x``, ``*``), npm hyphen ranges (``1.2 - 2.3``),
``,``/space conjunction and ``||`` disjunction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering

from driftmon.model import DriftmonError

_VERSION = re.compile(
    r"^v?(?P<release>\d+(?:\.\d+)*)"
    r"(?:[-_.]?(?P<pre>(?:dev|a|alpha|b|beta|c|rc|pre|preview)[-_.]?\d*|[0-9A-Za-z][0-9A-Za-z.\-]*))?"
    r"(?:\+[0-9A-Za-z.\-]+)?$",
    re.I,
)
_PRE_RANK = {"dev": 0, "a": 1, "alpha": 1, "b": 2, "beta": 2, "c": 3, "rc": 3, "pre": 3, "preview": 3}
_PRE_PARTS = re.compile(r"^([A-Za-z]+)[-_.]?(\d*)$")


@total_ordering
@dataclass(frozen=True)
class Version:
    release: tuple[int, ...]
    pre: str | None = None

    def _key(self):
        release = list(self.release)
        while len(release) > 1 and release[-1] == 0:
            release.pop()
        if self.pre is None:
            pre_key = (1, 0, 0, "")
        else:
            m = _PRE_PARTS.match(self.pre)
            if m and m.group(1).lower() in _PRE_RANK:
                pre_key = (0, _PRE_RANK[m.group(1).lower()], int(m.group(2) or 0), "")
            else:
                pre_key = (0, 2, 0, self.pre.lower())
        return tuple(release), pre_key

    def __eq__(self, other):
        return isinstance(other, Version) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __lt__(self, other: "Version") -> bool:
        return self._key() < other._key()

    def __str__(self) -> str:
        base = ".".join(map(str, self.release))
        return f"{base}-{self.pre}" if self.pre else base


def parse_version(text: str) -> Version:
    m = _VERSION.match(text.strip())
    if not m:
        raise DriftmonError("INVALID_VERSION", text)
    release = tuple(int(p) for p in m.group("release").split("."))
    return Version(release, m.group("pre"))


def _bump(release: tuple[int, ...], index: int) -> Version:
    head = list(release[: index + 1])
    head[index] += 1
    return Version(tuple(head), "dev0")  # lowest version of the next bucket, incl. pre-releases


def _wildcard_bounds(text: str) -> tuple[Version, Version] | None:
    parts = text.split(".")
    if not any(p in ("*", "x", "X") for p in parts):
        return None
    fixed = []
    for p in parts:
        if p in ("*", "x", "X"):
            break
        fixed.append(int(p))
    if not fixed:
        return Version((0,), "dev0"), Version((10**9,))
    return Version(tuple(fixed), "dev0"), _bump(tuple(fixed), len(fixed) - 1)


_CLAUSE = re.compile(r"^(===|==|!=|>=|<=|~=|>|<|\^|~|=)?\s*(.+)$")


def _clause_predicate(op: str, ver: str):
    wild = _wildcard_bounds(ver.lstrip("v"))
    if wild is not None:
        lo, hi = wild
        if op in ("", "==", "=", "===", "^", "~"):
            return lambda v: lo <= v < hi
        if op == "!=":
            return lambda v: not (lo <= v < hi)
        if op == ">=":
            return lambda v: v >= lo
        if op == "<":
            return lambda v: v < lo
        raise DriftmonError("UNPARSEABLE_CONSTRAINT", op + ver)
    target = parse_version(ver)
    rel = target.release
    if op in ("", "==", "=", "==="):
        return lambda v: v == target
    if op == "!=":
        return lambda v: v != target
    if op == ">=":
        return lambda v: v >= target
    if op == "<=":
        return lambda v: v <= target
    if op == ">":
        return lambda v: v > target
    if op == "<":
        # "<2" does not admit 2.0rc1 unless the bound is itself a pre-release
        return lambda v: v < target and not (
            target.pre is None and v.pre is not None and Version(v.release) == target
        )
    if op == "~=":
        if len(rel) < 2:
            raise DriftmonError("UNPARSEABLE_CONSTRAINT", op + ver)
        upper = _bump(rel, len(rel) - 2)
        return lambda v: target <= v < upper
    if op == "^":
        nonzero = next((i for i, p in enumerate(rel) if p != 0), len(rel) - 1)
        upper = _bump(rel, min(nonzero, len(rel) - 1))
        return lambda v: target <= v < upper
    if op == "~":
        upper = _bump(rel, 1 if len(rel) > 1 else 0)
        return lambda v: target <= v < upper
    raise DriftmonError("UNPARSEABLE_CONSTRAINT", op + ver)


def _conjunction(text: str):
    text = text.strip()
    hyphen = re.fullmatch(r"(\S+)\s+-\s+(\S+)", text)
    if hyphen:
        lo, hi = parse_version(hyphen.group(1)), parse_version(hyphen.group(2))
        return [lambda v: lo <= v <= hi]
    # glue operators to their versions: ">= 1.2" -> ">=1.2"
    text = re.sub(r"(===|==|!=|>=|<=|~=|>|<|\^|~|=)\s+", r"\1", text)
    clauses = [c for c in re.split(r"[,\s]+", text) if c]
    if not clauses:
        raise DriftmonError("UNPARSEABLE_CONSTRAINT", text)
    preds = []
    for clause in clauses:
        m = _CLAUSE.match(clause)
        if not m:
            raise DriftmonError("UNPARSEABLE_CONSTRAINT", clause)
        preds.append(_clause_predicate(m.group(1) or "", m.group(2)))
    return preds


def satisfies(version: str | Version, constraint: str) -> bool:
    """Does ``version`` lie in the set described by ``constraint``?"""
    v = version if isinstance(version, Version) else parse_version(version)
    alternatives = [a for a in constraint.split("||")]
    if not any(a.strip() for a in alternatives):
        raise DriftmonError("UNPARSEABLE_CONSTRAINT", constraint)
    for alt in alternatives:
        if not alt.strip():
            raise DriftmonError("UNPARSEABLE_CONSTRAINT", constraint)
        if all(pred(v) for pred in _conjunction(alt)):
            return True
    return False


def canonical_name(name: str) -> str:
    """PEP 503 style name folding (also applied to npm names)."""
    return re.sub(r"[-_.]+", "-", name).lower()


@dataclass(frozen=True)
class Requirement:
    name: str
    constraint: str
    ecosystem: str  # "pypi" or "npm"

    @property
    def pinned(self) -> str | None:
        """The exact version when the constraint is a single pin."""
        m = re.fullmatch(r"(?:===|==|=)?\s*v?(\d[\w.\-+]*)", self.constraint.strip())
        if m and "*" not in m.group(1):
            return m.group(1)
        return None

    def target_version(self) -> Version:
        """Version a pin or lower-bounded range is anchored on."""
        m = re.search(r"(?:===|==|>=|~=|\^|~|=)?\s*v?(\d[\w.\-+]*)", self.constraint)
        if not m:
            raise DriftmonError("UNPARSEABLE_CONSTRAINT", self.constraint)
        return parse_version(m.group(1))


_PIP_REQ = re.compile(
    r"^(?P<name>[A-Za-z0-9][A-Za-z0-9_.\-]*)(?:\[[^\]]*\])?\s*(?P<spec>(?:===|==|!=|>=|<=|~=|>|<).*)$"
)
_NPM_REQ = re.compile(r"^(?P<name>(?:@[a-z0-9][\w.\-]*/)?[a-z0-9][\w.\-]*)@(?P<spec>[\^~=<>]*v?\d.*)$")


def parse_requirement(text: str) -> Requirement:
    text = text.strip()
    m = _NPM_REQ.match(text)
    if m:
        return Requirement(m.group("name"), m.group("spec"), "npm")
    m = _PIP_REQ.match(text)
    if m:
        return Requirement(m.group("name"), m.group("spec").strip(), "pypi")
    raise DriftmonError("UNPARSEABLE_CONSTRAINT", text)


_CONSTRAINT_TAIL = r"(?:===|==|!=|>=|<=|~=|>|<)\s*v?\d[\w.*+!\-]*(?:\s*,\s*(?:===|==|!=|>=|<=|~=|>|<)\s*v?\d[\w.*+!\-]*)*"


def find_constraints(text: str, name: str) -> list[str]:
    """Constraint expressions written against package ``name`` anywhere in ``text``."""
    target = canonical_name(name)
    found = []
    pip = re.compile(
        r"(?<![\w.\-/@])(?P<name>[A-Za-z0-9][A-Za-z0-9_.\-]*)(?:\[[^\]]*\])?\s*(?P<spec>" + _CONSTRAINT_TAIL + ")"
    )
    for m in pip.finditer(text):
        if canonical_name(m.group("name")) == target:
            found.append(m.group("spec").rstrip(".,;"))
    npm = re.compile(
        r"(?<![\w@/.\-])(?P<name>(?:@[a-z0-9][\w.\-]*/)?[a-z0-9][\w.\-]*)@(?P<spec>[\^~]?v?\d[\w.\-]*)"
    )
    for m in npm.finditer(text):
        if canonical_name(m.group("name")) == target:
            found.append(m.group("spec").rstrip(".,;"))
    return found
