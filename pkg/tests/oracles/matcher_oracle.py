"""Brute-force reference for the contract/drift match rule.

Written against the rule statement only: every rule is evaluated on its
own (no early exit), then the first true rule in EXACT, TOK2, TYPED1
order is reported. Nothing here imports the production matcher.
"""

from __future__ import annotations

from driftmon.model import ContractType, DriftType, Role

NAME_TYPES = {"DEPENDENCY", "CONTAINER_IMAGE", "CI_ACTION", "TOOL_AVAILABILITY"}
URL_TYPES = {"SERVICE_URL", "API_ENDPOINT"}
TAIL_NAMED = {"CONTAINER_IMAGE", "CI_ACTION"}
STOP = {"http", "https", "www", "com", "org", "io", "net", "api", "the", "a", "an", "latest"}
STRIP = set("\"'`()<>[],;")
SEPS = set("/-_.:@= \t\n<>!~^,?&#{}*+|")

# which drift kinds may touch which contract kinds
ALLOWED = {
    "DEPENDENCY": {"VERSION_BUMP", "DEPENDENCY_UPDATE", "DEPRECATION"},
    "SERVICE_URL": {"URL_CHANGE", "DEPRECATION"},
    "API_ENDPOINT": {"URL_CHANGE", "API_MIGRATION", "DEPRECATION", "SCHEMA_CHANGE"},
    "CONFIGURATION": {"CONFIG_CHANGE", "DEPRECATION"},
    "SCHEMA_FIELD": {"SCHEMA_CHANGE", "API_MIGRATION"},
    "AUTHENTICATION": {"AUTH_CHANGE", "API_MIGRATION"},
    "ENV_VARIABLE": {"CONFIG_CHANGE", "AUTH_CHANGE"},
    "CONTAINER_IMAGE": {"VERSION_BUMP", "DEPENDENCY_UPDATE", "DEPRECATION"},
    "CI_ACTION": {"VERSION_BUMP", "DEPENDENCY_UPDATE", "DEPRECATION"},
    "CLOUD_RESOURCE": {"CONFIG_CHANGE", "URL_CHANGE"},
    "CLI_INTERFACE": {"DEPRECATION", "API_MIGRATION", "CONFIG_CHANGE"},
    "TOOL_AVAILABILITY": {"DEPRECATION", "VERSION_BUMP"},
}


def seps_for(ct: str) -> set[str]:
    # hyphens and underscores belong to package names
    return SEPS - {"-", "_"} if ct in NAME_TYPES else SEPS


def canon(ct: str, value: str) -> str:
    s = value
    for _ in range(100):
        prev = s
        # trim whitespace and wrapping punctuation one character at a time
        while s and (s[0].isspace() or s[0] in STRIP):
            s = s[1:]
        while s and (s[-1].isspace() or s[-1] in STRIP):
            s = s[:-1]
        if ct in URL_TYPES:
            low = s.lower()
            if low.startswith("https://"):
                s = s[8:]
            elif low.startswith("http://"):
                s = s[7:]
        if ct == "ENV_VARIABLE":
            while s.startswith("$"):
                s = s[1:]
            if len(s) >= 2 and s[0] == "{" and s[-1] == "}":
                s = s[1:-1]
        else:
            s = s.lower()
        while "//" in s:
            s = s.replace("//", "/")
        while s.endswith("/"):
            s = s[:-1]
        if s == prev:
            break
    return s


def starts_like_version(tok: str) -> bool:
    if tok[:1].isdigit():
        return True
    return len(tok) >= 2 and tok[0] == "v" and tok[1].isdigit()


def split_tokens(ct: str, value: str) -> list[str]:
    c = canon(ct, value)
    seps = seps_for(ct)
    raw, cur = [], ""
    for ch in c:
        if ch in seps:
            raw.append(cur)
            cur = ""
        else:
            cur += ch
    raw.append(cur)
    out = []
    for t in raw:
        if not t or t.lower() in STOP:
            continue
        if starts_like_version(t):
            if ct in NAME_TYPES:
                out.append(t)
        elif len(t) >= 2:
            out.append(t)
    return out


def head_of(ct: str, tokens: list[str]) -> str:
    names = [t for t in tokens if not starts_like_version(t)]
    if not names:
        return ""
    return names[-1] if ct in TAIL_NAMED else names[0]


def boundary_ok(longer: str, start: int, length: int, seps: set[str], shorter: str) -> bool:
    end = start + length
    if start > 0:
        ch = longer[start - 1]
        if ch not in seps:
            return False
        # "1.21" must not be found inside "11.21": a dot between digits is part of a number
        if ch == "." and start >= 2 and longer[start - 2].isdigit() and shorter[0].isdigit():
            return False
    if end < len(longer):
        ch = longer[end]
        if ch not in seps:
            return False
        if ch == "." and end + 1 < len(longer) and longer[end + 1].isdigit() and shorter[-1].isdigit():
            return False
    return True


def exact_rule(ct: str, a: str, b: str) -> bool:
    ca, cb = canon(ct, a), canon(ct, b)
    if ca == cb:
        return True
    if len(ca) <= len(cb):
        short, long_, short_raw = ca, cb, a
    else:
        short, long_, short_raw = cb, ca, b
    if not split_tokens(ct, short_raw):
        return False
    seps = seps_for(ct)
    for i in range(len(long_) - len(short) + 1):
        if long_[i : i + len(short)] == short and boundary_ok(long_, i, len(short), seps, short):
            return True
    return False


def evaluate(ct: ContractType | str, role: Role | str, value: str, dt: DriftType | str, old: str):
    """(matched, level name or None) for one contract/drift pair."""
    ct = getattr(ct, "name", ct)
    role = getattr(role, "name", role)
    dt = getattr(dt, "name", dt)
    if role != "OPERATIONAL":
        return False, None
    if dt not in ALLOWED[ct]:
        return False, None
    if not canon(ct, value) or not canon(ct, old):
        return False, None
    tv, to = split_tokens(ct, value), split_tokens(ct, old)
    shared = set(tv) & set(to)
    rules = {
        "EXACT": exact_rule(ct, value, old),
        "TOK2": len(shared) >= 2 and any(not starts_like_version(t) for t in shared),
        "TYPED1": (
            len(shared) == 1
            and ct in NAME_TYPES
            and head_of(ct, tv) != ""
            and next(iter(shared)) == head_of(ct, tv) == head_of(ct, to)
        ),
    }
    for level in ("EXACT", "TOK2", "TYPED1"):
        if rules[level]:
            return True, level
    return False, None
