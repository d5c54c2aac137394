"""Seeded generators for formatting and semantic hard negatives."""

from __future__ import annotations

import random
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable

from driftmon.extract import Mode, PatternFamily, extract_mentions, layout_of
from driftmon.matcher import normalize
from driftmon.model import (
    BenchCase,
    ContractType,
    DriftEvent,
    DriftmonError,
    DriftType,
    Role,
    SkillDocument,
    Split,
)
from driftmon.roles import assign_role, extract_contracts
from driftmon.versions import parse_requirement

ORDERED_MARKER = "<!-- ordered -->"
_ATX = re.compile(r"^(?P<indent>[ \t]{0,3})(?P<hashes>#{1,6})(?:[ \t]+(?P<title>.*?))?[ \t]*$")


def _fenced_lines(text: str) -> set[int]:
    """Indices of lines that sit inside (or open/close) a code fence."""
    layout = layout_of(text)
    inside, pos = set(), 0
    for i, line in enumerate(text.splitlines(keepends=True)):
        if layout.in_fence(pos):
            inside.add(i)
        pos += len(line)
    return inside


def _front_matter_lines(lines: list[str]) -> set[int]:
    if not lines or lines[0].strip() != "---":
        return set()
    for j in range(1, len(lines)):
        if lines[j].strip() == "---":
            return set(range(j + 1))
    return set()


def split_sections(text: str) -> tuple[str, list[str]]:
    """(preamble, sections) split at ATX headings outside fences."""
    lines = text.splitlines(keepends=True)
    skip = _fenced_lines(text) | _front_matter_lines(lines)
    preamble: list[str] = []
    sections: list[list[str]] = []
    for i, line in enumerate(lines):
        if i not in skip and _ATX.match(line.rstrip("\r\n")) and line.lstrip().startswith("#"):
            sections.append([line])
        elif sections:
            sections[-1].append(line)
        else:
            preamble.append(line)
    return "".join(preamble), ["".join(s) for s in sections]


def _join(preamble: str, sections: list[str]) -> str:
    parts = [preamble] if preamble else []
    for s in sections:
        parts.append(s if s.endswith("\n") else s + "\n")
    out = ""
    for p in parts:
        if out and not out.endswith("\n\n"):
            out += "\n"
        out += p
    return out


# -- formatting transforms --------------------------------------------------


def reorder_sections(text: str, rng: random.Random) -> str:
    preamble, sections = split_sections(text)
    movable = [i for i, s in enumerate(sections) if ORDERED_MARKER not in s]
    if len(movable) < 2:
        return text
    picked = [sections[i] for i in movable]
    shuffled = picked[:]
    for _ in range(8):
        rng.shuffle(shuffled)
        if shuffled != picked:
            break
    else:
        shuffled = picked[1:] + picked[:1]
    out = sections[:]
    for i, s in zip(movable, shuffled):
        out[i] = s
    return _join(preamble, out)


def normalize_headings(text: str, rng: random.Random) -> str:
    """Single space after the hashes, no closing hashes, top level rebased."""
    lines = text.splitlines(keepends=True)
    skip = _fenced_lines(text) | _front_matter_lines(lines)
    heads = {}
    for i, line in enumerate(lines):
        m = _ATX.match(line.rstrip("\r\n"))
        if i not in skip and m and m.group("title") is not None:
            heads[i] = m
    if not heads:
        return text
    top = min(len(m.group("hashes")) for m in heads.values())
    target = rng.choice((1, 2))
    for i, m in heads.items():
        level = min(6, len(m.group("hashes")) - top + target)
        title = re.sub(r"[ \t]+#+$", "", m.group("title")).strip()
        ending = lines[i][len(lines[i].rstrip("\r\n")):]
        lines[i] = "#" * level + " " + title + ending
    return "".join(lines)


_BULLET = re.compile(r"^(?P<indent>[ \t]*)(?P<marker>[-*])(?P<gap>[ \t]+)(?=\S)")


def swap_list_markers(text: str, rng: random.Random) -> str:
    lines = text.splitlines(keepends=True)
    skip = _fenced_lines(text) | _front_matter_lines(lines)
    for i, line in enumerate(lines):
        if i in skip:
            continue
        m = _BULLET.match(line)
        if m:
            swapped = "*" if m.group("marker") == "-" else "-"
            lines[i] = m.group("indent") + swapped + line[m.end("marker"):]
    return "".join(lines)


def normalize_whitespace(text: str, rng: random.Random) -> str:
    """Strip trailing blanks, expand tabs in prose, collapse blank runs."""
    lines = text.splitlines()
    fenced = _fenced_lines(text)
    out = []
    for i, line in enumerate(lines):
        if i not in fenced:
            line = line.rstrip().expandtabs(4)
        elif not line.rstrip().endswith("\\"):
            line = line.rstrip()
        if not line.strip() and out and not out[-1].strip():
            continue
        out.append(line)
    while out and not out[-1].strip():
        out.pop()
    return "\n".join(out) + "\n"


_FENCE_LINE = re.compile(r"^(?P<indent>[ \t]{0,3})(?P<marker>`{3,}|~{3,})(?P<info>[^`\n]*)$")


def toggle_fence_languages(text: str, rng: random.Random) -> str:
    layout = layout_of(text)
    opening = {start for start, _ in layout.fences}
    lines = text.splitlines(keepends=True)
    pos = 0
    for i, line in enumerate(lines):
        if pos in opening:
            body = line.rstrip("\r\n")
            m = _FENCE_LINE.match(body)
            if m:
                info = m.group("info").strip()
                new_info = "" if info else "text"
                lines[i] = m.group("indent") + m.group("marker") + new_info + line[len(body):]
        pos += len(line)
    return "".join(lines)


FORMATTING_TRANSFORMS: dict[str, Callable[[str, random.Random], str]] = {
    "reorder_sections": reorder_sections,
    "normalize_headings": normalize_headings,
    "swap_list_markers": swap_list_markers,
    "normalize_whitespace": normalize_whitespace,
    "toggle_fence_languages": toggle_fence_languages,
}


def mention_multiset(doc: SkillDocument) -> Counter:
    return Counter((m.family, m.value) for m in extract_mentions(doc, Mode.FULL15))


def contract_triples(doc: SkillDocument) -> set[tuple]:
    return {
        (c.contract_type, normalize(c.contract_type, c.value).canonical, c.role)
        for c in extract_contracts(doc, Mode.FULL15)
    }


def gen_formatting_negative(skill: SkillDocument, seed: int) -> BenchCase:
    """A label-false case whose skill differs from ``skill`` only in surface form."""
    _, sections = split_sections(skill.text)
    if len(sections) < 2:
        raise DriftmonError("TOO_FEW_SECTIONS", skill.id)
    rng = random.Random(f"formatting:{skill.id}:{seed}")
    names = list(FORMATTING_TRANSFORMS)
    chosen = [n for n in names if rng.random() < 0.5]
    if "reorder_sections" not in chosen and rng.random() < 0.5:
        chosen.insert(0, "reorder_sections")
    if not chosen:
        chosen = [rng.choice(names)]
    chosen.sort(key=names.index)

    base_mentions = mention_multiset(skill)
    base_contracts = contract_triples(skill)
    text, applied, rejected = skill.text, [], []
    for name in chosen:
        candidate = FORMATTING_TRANSFORMS[name](text, rng)
        if candidate == text:
            continue
        trial = SkillDocument(skill.id, candidate)
        if mention_multiset(trial) == base_mentions and contract_triples(trial) == base_contracts:
            text = candidate
            applied.append(name)
        else:
            rejected.append(name)
    new_doc = SkillDocument(
        id=f"{skill.id}~fmt{seed}",
        text=text,
        metadata={"derived_from": skill.id},
    )
    return BenchCase(
        case_id=f"fmt-{skill.id}-{seed}",
        split=Split.FORMATTING_NEG,
        skill=new_doc,
        drift_events=(),
        label=False,
        metadata={"seed": seed, "source": skill.id, "transforms": applied, "rejected": rejected},
    )


# -- semantic transforms ----------------------------------------------------

_VERSION_IN_VALUE = re.compile(r"(?<![\d.])(\d+)\.(\d+)(?:\.(\d+))?(?![\d])")


@dataclass(frozen=True)
class _Candidate:
    kind: str
    value: str
    spans: tuple[tuple[int, int, str], ...]  # char start, end, raw


def _bump(value: str, step: int) -> str | None:
    matches = list(_VERSION_IN_VALUE.finditer(value))
    if not matches:
        return None
    m = matches[-1]
    parts = [g for g in m.groups() if g is not None]
    parts[-1] = str(int(parts[-1]) + step)
    return value[: m.start()] + ".".join(parts) + value[m.end():]


def _overlaps(value: str, operational: list[str]) -> bool:
    v = value.lower()
    return any(v in o.lower() or o.lower() in v for o in operational)


_GENERIC_WORDS = frozenset({"http", "https", "www", "com", "org", "io", "net", "dev"})


def identifier_words(value: str) -> set[str]:
    """Alphanumeric words of ``value`` that could name something (not versions)."""
    return {
        w
        for w in re.split(r"[^a-z0-9]+", value.lower())
        if len(w) >= 2 and not w[0].isdigit() and w not in _GENERIC_WORDS
    }


def _names_operational(value: str, operational: list[str]) -> bool:
    """Does ``value`` share any identifier word with an operational mention?"""
    words = identifier_words(value)
    return any(words & identifier_words(o) for o in operational)


def _role_map(doc: SkillDocument):
    """Mentions with their roles, plus the raw texts of operational ones."""
    mentions = extract_mentions(doc, Mode.FULL15)
    roles = [assign_role(m, doc) for m in mentions]
    operational = []
    for m, r in zip(mentions, roles):
        if r is Role.OPERATIONAL:
            operational += [m.raw, m.value]
    return mentions, roles, operational


def _incidental_only(mentions, roles, family_filter) -> dict[str, list]:
    """Values whose every occurrence (per family filter) is incidental."""
    by_value: dict[str, list] = {}
    blocked = set()
    for m, r in zip(mentions, roles):
        if not family_filter(m.family):
            continue
        if r is Role.OPERATIONAL:
            blocked.add(m.value)
        by_value.setdefault(m.value, []).append(m)
    return {v: ms for v, ms in by_value.items() if v not in blocked}


def _spans(doc: SkillDocument, ms) -> tuple[tuple[int, int, str], ...]:
    return tuple(
        sorted({(doc.to_char(m.span.start), doc.to_char(m.span.end), m.raw) for m in ms})
    )


def _semantic_candidates(doc: SkillDocument) -> dict[str, list[_Candidate]]:
    mentions, roles, operational = _role_map(doc)
    out: dict[str, list[_Candidate]] = {"incidental_version": [], "url_alias": [], "commentary_version": []}

    versions = _incidental_only(mentions, roles, lambda f: f is not PatternFamily.URL)
    for value, ms in sorted(versions.items()):
        if (
            _VERSION_IN_VALUE.search(value)
            and not _overlaps(value, operational)
            and not _names_operational(value, operational)
        ):
            out["incidental_version"].append(_Candidate("incidental_version", value, _spans(doc, ms)))

    urls = _incidental_only(mentions, roles, lambda f: f is PatternFamily.URL)
    for value, ms in sorted(urls.items()):
        canonical = normalize(ContractType.SERVICE_URL, value).canonical
        if not _overlaps(canonical, operational) and not _names_operational(value, operational):
            out["url_alias"].append(_Candidate("url_alias", value, _spans(doc, ms)))

    for c in extract_contracts(doc, Mode.FULL15):
        if c.role is not Role.OPERATIONAL or c.contract_type is not ContractType.DEPENDENCY:
            continue
        try:
            req = parse_requirement(c.value)
            pinned = req.target_version()
        except DriftmonError:
            continue
        out["commentary_version"].append(
            _Candidate("commentary_version", f"{req.name}|{pinned.release[0]}", ())
        )
    return out


_COMMENTARY = (
    "See the {name} {version} changelog for details.",
    "Release notes for {name} {version} list further changes.",
    "The {name} {version} announcement covers the roadmap.",
)


def _url_alias(url: str, rng: random.Random) -> str:
    options = []
    if url.startswith("http://"):
        options.append("https://" + url[len("http://"):])
    elif url.startswith("https://"):
        options.append("http://" + url[len("https://"):])
    if "?" not in url and "#" not in url:
        options.append(url[:-1] if url.endswith("/") else url + "/")
    return rng.choice(options)


def _replace_spans(text: str, spans, old: str, new: str) -> str:
    for start, end, raw in sorted(spans, reverse=True):
        text = text[:start] + raw.replace(old, new, 1) + text[end:]
    return text


def gen_semantic_negative(skill: SkillDocument, seed: int) -> BenchCase:
    """A label-false case that changes an incidental value and ships a drift event for it."""
    rng = random.Random(f"semantic:{skill.id}:{seed}")
    candidates = _semantic_candidates(skill)
    kinds = [k for k, cs in candidates.items() if cs]
    if not kinds:
        raise DriftmonError("NO_ELIGIBLE_MENTION", skill.id)
    kind = rng.choice(kinds)
    cand = rng.choice(candidates[kind])
    text = skill.text
    operational = _role_map(skill)[2]

    if kind == "incidental_version":
        step = rng.randint(1, 9)
        bumped = _bump(cand.value, step)
        while _overlaps(bumped, operational):
            step += 1
            bumped = _bump(cand.value, step)
        text = _replace_spans(text, cand.spans, cand.value, bumped)
        event = DriftEvent(DriftType.VERSION_BUMP, bumped, _bump(bumped, 1), source="generated")
        detail = {"original": cand.value, "changed_to": bumped}
    elif kind == "url_alias":
        alias = _url_alias(cand.value, rng)
        text = _replace_spans(text, cand.spans, cand.value, alias)
        event = DriftEvent(DriftType.URL_CHANGE, cand.value, alias, source="generated")
        detail = {"original": cand.value, "changed_to": alias}
    else:
        name, major = cand.value.split("|")
        new_major, minor = int(major) + rng.randint(1, 4), rng.randint(0, 5)
        version = f"{new_major}.{minor}"
        while _overlaps(version, operational):
            new_major += 1
            version = f"{new_major}.{minor}"
        sentence = rng.choice(_COMMENTARY).format(name=name, version=version)
        text = text.rstrip("\n") + "\n\n" + sentence + "\n"
        nxt = f"{new_major}.{minor + 1}"
        event = DriftEvent(DriftType.VERSION_BUMP, version, nxt, source="generated")
        detail = {"package": name, "sentence": sentence}

    new_doc = SkillDocument(id=f"{skill.id}~sem{seed}", text=text, metadata={"derived_from": skill.id})
    return BenchCase(
        case_id=f"sem-{skill.id}-{seed}",
        split=Split.SEMANTIC_NEG,
        skill=new_doc,
        drift_events=(event,),
        label=False,
        drift_type=event.drift_type,
        metadata={"seed": seed, "source": skill.id, "transform": kind, **detail},
    )
