"""Deterministic mention extraction over markdown skill documents.

Each pattern family is a small set of regular expressions (plus one token
scanner for ``docker run`` lines). Families never suppress each other; overlap
is resolved later when contracts are formed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterator

from driftmon.model import ContextKind, DriftmonError, Mention, SkillDocument, Span


class PatternFamily(str, Enum):
    URL = "URL"
    VERSION_CONSTRAINT = "VERSION_CONSTRAINT"
    IMPORT = "IMPORT"
    API_PATH = "API_PATH"
    AUTH_PATTERN = "AUTH_PATTERN"
    DOCKER_IMAGE = "DOCKER_IMAGE"
    GITHUB_ACTION = "GITHUB_ACTION"
    ENV_VAR = "ENV_VAR"
    CLOUD_REGION = "CLOUD_REGION"
    CLI_FLAG = "CLI_FLAG"
    CONFIG_FILENAME = "CONFIG_FILENAME"
    NPM_AT_VERSION = "NPM_AT_VERSION"
    GIT_BRANCH = "GIT_BRANCH"
    DOCKER_IMAGE_TAGGED = "DOCKER_IMAGE_TAGGED"
    BARE_SEMVER = "BARE_SEMVER"

    def __str__(self) -> str:
        return self.name


class Mode(str, Enum):
    BASE7 = "BASE7"
    FULL15 = "FULL15"

    @classmethod
    def parse(cls, raw: "str | Mode") -> "Mode":
        if isinstance(raw, Mode):
            return raw
        key = str(raw).upper()
        if key not in cls.__members__:
            raise DriftmonError("UNKNOWN_MODE", str(raw))
        return cls[key]


ALL_FAMILIES: tuple[PatternFamily, ...] = tuple(PatternFamily)
BASE7_FAMILIES: tuple[PatternFamily, ...] = ALL_FAMILIES[:7]
_FAMILY_ORDER = {f: i for i, f in enumerate(ALL_FAMILIES)}

CODE_CONTEXTS = frozenset({ContextKind.CODE_FENCE, ContextKind.INLINE_CODE})

# ---------------------------------------------------------------------------
# Document layout (markdown regions used for context classification)
# ---------------------------------------------------------------------------

_FENCE_OPEN = re.compile(r"^[ \t]{0,3}(`{3,}|~{3,})(.*)$")
_HTML_COMMENT = re.compile(r"<!--.*?-->", re.S)
_INLINE_CODE = re.compile(r"(?<!`)(`+)(?!`)(.+?)(?<!`)\1(?!`)", re.S)
_BADGE_LINK = re.compile(r"\[!\[[^\]\n]*\]\([^)\n]*\)\]\([^)\n]*\)")
_IMAGE = re.compile(r"!\[[^\]\n]*\]\([^)\n]*\)|<img\b[^>\n]*>", re.I)
_LINK = re.compile(r"(?<!!)\[[^\]\n]+\]\([^)\n]*\)|^[ \t]{0,3}\[[^\]\n]+\]:[ \t]*\S+", re.M)
_HEADING = re.compile(r"^[ \t]{0,3}#{1,6}(?:[ \t].*)?$", re.M)
_CODE_COMMENT = re.compile(r"(?:(?<=\s)|^)(?:#|//)", re.M)


@dataclass(frozen=True)
class Layout:
    """Character-indexed markdown regions of one document."""

    fences: tuple[tuple[int, int], ...]
    fence_bodies: tuple[tuple[int, int], ...]
    code_comments: tuple[tuple[int, int], ...]
    html_comments: tuple[tuple[int, int], ...]
    inline_code: tuple[tuple[int, int], ...]
    images: tuple[tuple[int, int], ...]
    links: tuple[tuple[int, int], ...]
    headings: tuple[tuple[int, int], ...]

    def in_fence(self, pos: int) -> bool:
        return _inside(self.fences, pos)

    def context_at(self, pos: int) -> ContextKind:
        if _inside(self.fences, pos):
            if _inside(self.code_comments, pos):
                return ContextKind.COMMENT
            return ContextKind.CODE_FENCE
        if _inside(self.html_comments, pos):
            return ContextKind.COMMENT
        if _inside(self.inline_code, pos):
            return ContextKind.INLINE_CODE
        if _inside(self.images, pos):
            return ContextKind.BADGE_OR_IMAGE
        if _inside(self.links, pos):
            return ContextKind.LINK_LABEL
        if _inside(self.headings, pos):
            return ContextKind.HEADING
        return ContextKind.PROSE


def _inside(regions: tuple[tuple[int, int], ...], pos: int) -> bool:
    for start, end in regions:
        if start <= pos < end:
            return True
        if start > pos:
            return False
    return False


def _masked(text: str, regions: list[tuple[int, int]]) -> str:
    """Blank out regions (keeping newlines) so later patterns skip them."""
    chars = list(text)
    for start, end in regions:
        for i in range(start, end):
            if chars[i] != "\n":
                chars[i] = " "
    return "".join(chars)


@lru_cache(maxsize=512)
def layout_of(text: str) -> Layout:
    fences: list[tuple[int, int]] = []
    bodies: list[tuple[int, int]] = []
    comments: list[tuple[int, int]] = []
    pos = 0
    lines = text.splitlines(keepends=True)
    i = 0
    offsets = []
    for line in lines:
        offsets.append(pos)
        pos += len(line)
    offsets.append(pos)
    while i < len(lines):
        m = _FENCE_OPEN.match(lines[i].rstrip("\r\n"))
        if not m:
            i += 1
            continue
        marker = m.group(1)
        start = offsets[i]
        j = i + 1
        while j < len(lines):
            close = lines[j].strip()
            if close.startswith(marker[0] * len(marker)) and set(close) == {marker[0]}:
                break
            j += 1
        body_start = offsets[i + 1] if i + 1 < len(offsets) else len(text)
        body_end = offsets[j] if j < len(lines) else len(text)
        end = offsets[j + 1] if j < len(lines) else len(text)
        fences.append((start, end))
        bodies.append((body_start, body_end))
        body = text[body_start:body_end]
        for cm in _CODE_COMMENT.finditer(body):
            line_end = body.find("\n", cm.start())
            line_end = len(body) if line_end < 0 else line_end
            comments.append((body_start + cm.start(), body_start + line_end))
        i = j + 1

    outside = _masked(text, fences)
    html = [(m.start(), m.end()) for m in _HTML_COMMENT.finditer(outside)]
    outside = _masked(outside, html)
    inline = [
        (m.start(), m.end())
        for m in _INLINE_CODE.finditer(outside)
        if "\n\n" not in m.group(0)
    ]
    no_code = _masked(outside, inline)
    images = sorted(
        [(m.start(), m.end()) for m in _BADGE_LINK.finditer(no_code)]
        + [(m.start(), m.end()) for m in _IMAGE.finditer(no_code)]
    )
    links = [(m.start(), m.end()) for m in _LINK.finditer(_masked(no_code, images))]
    headings = [(m.start(), m.end()) for m in _HEADING.finditer(outside)]
    return Layout(
        fences=tuple(fences),
        fence_bodies=tuple(bodies),
        code_comments=tuple(sorted(comments)),
        html_comments=tuple(html),
        inline_code=tuple(inline),
        images=tuple(images),
        links=tuple(links),
        headings=tuple(headings),
    )


def classify_context(doc: SkillDocument, span: Span) -> ContextKind:
    """Context of the text at ``span`` (byte offsets into ``doc``)."""
    if span.end > doc.byte_length:
        raise DriftmonError("SPAN_OUT_OF_RANGE", f"{span.start}..{span.end}")
    return layout_of(doc.text).context_at(doc.to_char(span.start))


# ---------------------------------------------------------------------------
# Pattern families
# ---------------------------------------------------------------------------

# (char_start, char_end, value)
Hit = tuple[int, int, str]
_TRAILING = ".,;:!?*_~'\""


def _trim(text: str, start: int, end: int, extra: str = "") -> int:
    while end > start and text[end - 1] in _TRAILING + extra:
        end -= 1
    return end


_URL = re.compile(r"https?://[^\s<>()\[\]\"'`|\\^]+")


def _urls(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _URL.finditer(text):
        end = _trim(text, m.start(), m.end(), ")")
        while text[m.start():end].count("}") > text[m.start():end].count("{"):
            end -= 1
        if end - m.start() > len("https://"):
            yield m.start(), end, text[m.start():end]


_OPS2 = r"(?:===|==|>=|<=|~=|!=)"
_VERSION_CONSTRAINT = re.compile(
    r"(?<![\w.\-/@$])"
    r"(?P<name>[A-Za-z][A-Za-z0-9_.\-]*(?:\[[A-Za-z0-9_,.\-]+\])?)"
    r"(?:[ ]?" + _OPS2 + r"[ ]?|[<>])"
    r"\d[\w.*+!\-]*"
    r"(?:[ ]?,[ ]?(?:" + _OPS2 + r"|[<>])[ ]?\d[\w.*+!\-]*)*"
)


def _version_constraints(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _VERSION_CONSTRAINT.finditer(text):
        end = _trim(text, m.start(), m.end(), "-")
        raw = text[m.start():end]
        yield m.start(), end, re.sub(r"\s+", "", raw)


_IMPORT = re.compile(
    r"(?:^|(?<=`))[ \t]*(?:from[ \t]+(?P<from>[A-Za-z_][\w.]*)[ \t]+import\b"
    r"|import[ \t]+(?P<imp>[A-Za-z_][\w.]*))"
    r"|\brequire\(\s*['\"](?P<req>[^'\"\s]+)['\"]\s*\)"
    r"|^[ \t]*import\b[^'\"\n]*?\bfrom[ \t]+['\"](?P<esm>[^'\"\s]+)['\"]",
    re.M,
)


def _imports(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _IMPORT.finditer(text):
        for group in ("from", "imp", "req", "esm"):
            if m.group(group):
                start, end = m.span(group)
                if layout.context_at(start) in CODE_CONTEXTS:
                    yield start, end, m.group(group)
                break


_API_VERB = re.compile(r"\b(?:GET|POST|PUT|PATCH|DELETE)[ \t]+/[\w\-./{}:]*[\w}]")
_API_PATH = re.compile(r"(?<![\w.:/\-])/(?:v\d+|api)(?:/[\w\-.{}:]+)+")


def _api_paths(text: str, layout: Layout) -> Iterator[Hit]:
    taken: list[tuple[int, int]] = []
    for m in _API_VERB.finditer(text):
        taken.append(m.span())
        yield m.start(), m.end(), re.sub(r"\s+", " ", m.group(0))
    for m in _API_PATH.finditer(text):
        if any(s <= m.start() < e for s, e in taken):
            continue
        end = _trim(text, m.start(), m.end())
        yield m.start(), end, text[m.start():end]


_AUTH = re.compile(
    r"\bAuthorization:[ \t]*(?:Bearer|Basic|Token|Digest|token)\b"
    r"|\bBearer[ \t]+(?:\$\{?[A-Za-z_]\w*\}?|<[\w\-]+>|\{\{?[ \t]*[\w.]+[ \t]*\}?\}|[A-Z][A-Z0-9_]{2,}\b)"
    r"|(?<![\w\-])--(?:token|api-key|access-token)\b"
    r"|(?<![\w.])/(?:oauth2?|login/oauth)/(?:token|authorize|access_token)\b"
    r"|\bX-API-Key\b",
    re.I,
)


def _auth(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _AUTH.finditer(text):
        raw = m.group(0)
        if raw.lower().startswith("bearer") and not raw.startswith("Bearer"):
            continue
        yield m.start(), m.end(), raw


_IMAGE_REF = re.compile(r"[a-z0-9][\w.\-/]*(?::[\w][\w.\-]*)?(?:@sha256:[0-9a-f]{12,})?")
_IMAGE_KEY = re.compile(r"\bimage:[ \t]*[\"']?(?P<v>" + _IMAGE_REF.pattern + ")")
_DOCKERFILE_FROM = re.compile(
    r"^[ \t]*FROM[ \t]+(?:--platform=\S+[ \t]+)?(?P<v>" + _IMAGE_REF.pattern + ")", re.M
)
_DOCKER_CMD = re.compile(r"\bdocker[ \t]+(?:image[ \t]+|container[ \t]+)?(?:pull|run|create)\b")
_DOCKER_VALUE_FLAGS = frozenset(
    "-p -e -v -w -u -h -l -m --publish --env --env-file --volume --workdir --user "
    "--name --network --net --entrypoint --platform --mount --label --hostname "
    "--memory --cpus --gpus --restart --add-host --log-driver --device".split()
)
_TOKEN = re.compile(r"[^\s\\]+")


def _docker_images(text: str, layout: Layout) -> Iterator[Hit]:
    for rx in (_IMAGE_KEY, _DOCKERFILE_FROM):
        for m in rx.finditer(text):
            start, end = m.span("v")
            end = _trim(text, start, end)
            if end > start:
                yield start, end, text[start:end]
    for m in _DOCKER_CMD.finditer(text):
        pos = m.end()
        skip_next = False
        while pos < len(text):
            tok = _TOKEN.match(text, pos)
            if tok is None:
                ch = text[pos]
                if ch == "\n":
                    if text[:pos].rstrip(" \t").endswith("\\"):
                        pos += 1
                        continue
                    break
                pos += 1
                continue
            word = tok.group(0)
            pos = tok.end()
            if skip_next:
                skip_next = False
                continue
            if word.startswith("-"):
                skip_next = "=" not in word and word in _DOCKER_VALUE_FLAGS
                continue
            ref = _IMAGE_REF.fullmatch(word.rstrip("`"))
            if ref:
                start = tok.start()
                end = _trim(text, start, start + len(word.rstrip("`")))
                yield start, end, text[start:end]
            break


_GITHUB_ACTION = re.compile(r"\buses:[ \t]*[\"']?(?P<v>[\w.\-]+/[\w.\-/]+@[\w.\-/]+)")


def _github_actions(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _GITHUB_ACTION.finditer(text):
        start, end = m.span("v")
        end = _trim(text, start, end)
        yield start, end, text[start:end]


_ENV_BRACED = re.compile(r"\$\{(?P<v>[A-Z][A-Z0-9_]+)(?:[:\-?=+][^}\n]*)?\}")
_ENV_DOLLAR = re.compile(r"\$(?P<v>[A-Z][A-Z0-9_]+)\b")
_ENV_ASSIGN = re.compile(r"(?<![\w$.\-/])(?P<v>[A-Z][A-Z0-9_]{2,})=(?!=)")
_ENV_API = re.compile(
    r"os\.environ\[\s*[\"'](?P<a>\w+)[\"']\s*\]"
    r"|os\.(?:environ\.get|getenv)\(\s*[\"'](?P<b>\w+)[\"']"
    r"|process\.env\.(?P<c>[A-Z_][A-Z0-9_]*)"
)


def _env_vars(text: str, layout: Layout) -> Iterator[Hit]:
    for rx in (_ENV_BRACED, _ENV_DOLLAR):
        for m in rx.finditer(text):
            yield m.start(), m.end(), m.group("v")
    for m in _ENV_ASSIGN.finditer(text):
        start, end = m.span("v")
        yield start, end, m.group("v")
    for m in _ENV_API.finditer(text):
        group = next(g for g in ("a", "b", "c") if m.group(g))
        start, end = m.span(group)
        yield start, end, m.group(group)


_DIRECTIONS = "north|south|east|west|central|northeast|southeast|northwest|southwest"
_CLOUD_REGION = re.compile(
    r"\b(?:(?:us|eu|ap|sa|ca|me|af|il|mx)-(?:gov-)?(?:" + _DIRECTIONS + r")-\d"
    r"|(?:us|europe|asia|australia|northamerica|southamerica|me|africa)-(?:" + _DIRECTIONS + r")\d{1,2}"
    r"|eastus2?|westus[23]?|centralus|northeurope|westeurope|uksouth|japaneast|southeastasia)\b"
)


def _cloud_regions(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _CLOUD_REGION.finditer(text):
        yield m.start(), m.end(), m.group(0)


_CLI_FLAG = re.compile(r"(?<![\w\-])--[a-z][a-z0-9]*(?:-[a-z0-9]+)*(?:=[^\s'\"`\\)]+)?")


def _cli_flags(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _CLI_FLAG.finditer(text):
        if layout.context_at(m.start()) in CODE_CONTEXTS:
            end = _trim(text, m.start(), m.end())
            yield m.start(), end, text[m.start():end]


_CONFIG_NAMES = (
    r"pyproject\.toml|setup\.cfg|setup\.py|requirements(?:-\w+)?\.txt|package\.json"
    r"|package-lock\.json|yarn\.lock|pnpm-lock\.yaml|tsconfig\.json|Dockerfile"
    r"|docker-compose\.ya?ml|compose\.ya?ml|Makefile|\.env|\.npmrc|tox\.ini|pytest\.ini"
    r"|Cargo\.toml|go\.mod|\.gitlab-ci\.yml|[\w\-]+(?:\.[\w\-]+)*\.(?:ya?ml|toml|ini|cfg|conf)"
)
_CONFIG_FILENAME = re.compile(
    r"(?<![\w.\-/@:])(?:\.?[\w\-]+(?:\.[\w\-]+)*/)*(?:" + _CONFIG_NAMES + r")(?![\w\-/]|\.\w)"
)


def _config_filenames(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _CONFIG_FILENAME.finditer(text):
        yield m.start(), m.end(), m.group(0)


_NPM_AT_VERSION = re.compile(
    r"(?<![\w@/.\-])(?:@[a-z0-9][\w.\-]*/)?[a-z0-9][\w.\-]*"
    r"@[\^~]?\d+(?:\.\d+){0,2}(?:-[0-9A-Za-z.]+)?(?![\w@/])"
)


def _npm_versions(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _NPM_AT_VERSION.finditer(text):
        end = _trim(text, m.start(), m.end())
        yield m.start(), end, text[m.start():end]


_GIT_BRANCH = re.compile(
    r"\b(?P<o>origin/[\w.\-/]*\w)"
    r"|(?<![\w\-])--branch[ =](?P<b>[\w.\-/]*\w)"
    r"|\b(?P<r>refs/heads/[\w.\-/]*\w)"
)


def _git_branches(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _GIT_BRANCH.finditer(text):
        group = next(g for g in ("o", "b", "r") if m.group(g))
        start, end = m.span(group)
        yield start, end, m.group(group)


_DOCKER_IMAGE_TAGGED = re.compile(
    r"(?<![\w./:@\-])(?:[a-z0-9](?:[a-z0-9\-]*[a-z0-9])?\.)+[a-z]{2,}(?::\d{2,5})?"
    r"/(?:[a-z0-9][\w.\-]*/)*[a-z0-9][\w.\-]*:\w[\w.\-]{0,127}"
)


def _docker_tagged(text: str, layout: Layout) -> Iterator[Hit]:
    for m in _DOCKER_IMAGE_TAGGED.finditer(text):
        end = _trim(text, m.start(), m.end(), "-")
        yield m.start(), end, text[m.start():end]


KNOWN_TOOLS = frozenset(
    """python python3 node nodejs node.js npm pnpm yarn pip java jdk go golang rust cargo
    rustc docker kubernetes kubectl k8s helm terraform ansible postgres postgresql redis
    mysql mongodb elasticsearch kafka numpy pandas requests flask django fastapi pydantic
    react next.js vue angular typescript spark pyspark airflow dbt mlflow bazel nx torch
    pytorch tensorflow scikit-learn sklearn transformers ubuntu debian alpine nginx
    prometheus grafana jaeger opentelemetry otel gradle maven ruby rails php dotnet .net
    git gh aws gcloud azure faiss pinecone weaviate qdrant milvus langchain openai
    llama-index pytest tox poetry hatch uv ruff black mypy eslint prettier webpack vite
    jest jaeger-client cuda""".split()
)
_BARE_SEMVER = re.compile(
    r"(?<![\w.\-=@~^<>!/:+])v?\d+\.\d+(?:\.\d+)?(?:-[0-9A-Za-z]+(?:\.[0-9A-Za-z]+)*)?(?![\w]|\.\d)"
)
_WORD_BEFORE = re.compile(r"([A-Za-z][\w.+\-]*)[ \t(\[\"'`]*$")
_WORD_AFTER = re.compile(r"^[ \t)\]\"'`]*([A-Za-z][\w.+\-]*)")


def _package_names(text: str) -> set[str]:
    names = set()
    for m in _VERSION_CONSTRAINT.finditer(text):
        names.add(m.group("name").split("[")[0].lower())
    for m in _NPM_AT_VERSION.finditer(text):
        names.add(m.group(0).rsplit("@", 1)[0].lower())
    return names


def _bare_semvers(text: str, layout: Layout) -> Iterator[Hit]:
    known = KNOWN_TOOLS | _package_names(text)
    for m in _BARE_SEMVER.finditer(text):
        line_start = text.rfind("\n", 0, m.start()) + 1
        line_end = text.find("\n", m.end())
        line_end = len(text) if line_end < 0 else line_end
        before = _WORD_BEFORE.search(text[line_start:m.start()])
        after = _WORD_AFTER.search(text[m.end():line_end])
        neighbours = [w.group(1).lower().rstrip(".") for w in (before, after) if w]
        if any(n in known for n in neighbours):
            yield m.start(), m.end(), m.group(0)


_EXTRACTORS: dict[PatternFamily, Callable[[str, Layout], Iterator[Hit]]] = {
    PatternFamily.URL: _urls,
    PatternFamily.VERSION_CONSTRAINT: _version_constraints,
    PatternFamily.IMPORT: _imports,
    PatternFamily.API_PATH: _api_paths,
    PatternFamily.AUTH_PATTERN: _auth,
    PatternFamily.DOCKER_IMAGE: _docker_images,
    PatternFamily.GITHUB_ACTION: _github_actions,
    PatternFamily.ENV_VAR: _env_vars,
    PatternFamily.CLOUD_REGION: _cloud_regions,
    PatternFamily.CLI_FLAG: _cli_flags,
    PatternFamily.CONFIG_FILENAME: _config_filenames,
    PatternFamily.NPM_AT_VERSION: _npm_versions,
    PatternFamily.GIT_BRANCH: _git_branches,
    PatternFamily.DOCKER_IMAGE_TAGGED: _docker_tagged,
    PatternFamily.BARE_SEMVER: _bare_semvers,
}


def families_for(mode: Mode | str) -> tuple[PatternFamily, ...]:
    return BASE7_FAMILIES if Mode.parse(mode) is Mode.BASE7 else ALL_FAMILIES


def extract_mentions(doc: SkillDocument, mode: Mode | str = Mode.FULL15) -> list[Mention]:
    """Scan ``doc`` for explicit environmental mentions.

    Output is sorted by start byte (then end, then family order) and is a pure
    function of ``(doc.text, mode)``.
    """
    text = doc.text
    layout = layout_of(text)
    seen: set[tuple[PatternFamily, int, int]] = set()
    mentions: list[Mention] = []
    for family in families_for(mode):
        for start, end, value in _EXTRACTORS[family](text, layout):
            if end <= start or not value or (family, start, end) in seen:
                continue
            seen.add((family, start, end))
            span = doc.byte_span(start, end)
            mentions.append(
                Mention(
                    family=family,
                    raw=text[start:end],
                    value=value,
                    span=span,
                    line=text.count("\n", 0, start) + 1,
                    context=layout.context_at(start),
                )
            )
    mentions.sort(key=lambda m: (m.span.start, m.span.end, _FAMILY_ORDER[m.family]))
    return mentions
