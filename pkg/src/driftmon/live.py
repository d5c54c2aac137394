"""Open-world validation: URL probes and package-registry lookups.

Only evidence that directly falsifies a contract becomes a violation.
Everything else (200s, alias redirects, transport failures) is logged as
an observation.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence
from urllib.parse import quote, urljoin, urlsplit

import requests

from driftmon.model import (
    ContractRecord,
    ContractType,
    DriftmonError,
    EvidenceKind,
    MatchLevel,
    Role,
    Violation,
)
from driftmon.versions import Requirement, parse_requirement, parse_version

log = logging.getLogger(__name__)

DEFAULT_REGISTRY_BASES = {
    "pypi": "https://pypi.org",
    "npm": "https://registry.npmjs.org",
    "dockerhub": "https://hub.docker.com",
    "github": "https://api.github.com",
}
HARD_URL_STATUSES = frozenset({404, 410})
PERMANENT_REDIRECTS = frozenset({301, 308})


class EvidenceSource(str, Enum):
    URL_STATUS = "URL_STATUS"
    REGISTRY_LOOKUP = "REGISTRY_LOOKUP"


class RegistryVerdict(str, Enum):
    NOT_FOUND = "NOT_FOUND"
    VERSION_ABSENT = "VERSION_ABSENT"
    YANKED_OR_DEPRECATED = "YANKED_OR_DEPRECATED"
    OK = "OK"


HARD_VERDICTS = frozenset(
    {RegistryVerdict.NOT_FOUND, RegistryVerdict.VERSION_ABSENT, RegistryVerdict.YANKED_OR_DEPRECATED}
)


class LiveError(DriftmonError):
    """Transport or protocol failure; never evidence of drift."""


@dataclass(frozen=True)
class LiveEvidence:
    kind: EvidenceSource
    target: str
    status: int | RegistryVerdict
    redirect_location: str | None = None
    fetched_at: str = ""
    from_cache: bool = False

    def to_dict(self, volatile: bool = False) -> dict:
        """Serialize; timing and cache fields only when ``volatile`` is set."""
        out = {
            "kind": self.kind.value,
            "target": self.target,
            "status": self.status.value if isinstance(self.status, RegistryVerdict) else self.status,
            "redirect_location": self.redirect_location,
        }
        if volatile:
            out["fetched_at"] = self.fetched_at
            out["from_cache"] = self.from_cache
        return out


@dataclass
class ProbePolicy:
    network: bool = False
    cache_dir: str | None = None
    timeout_ms: int = 5000
    per_host_limit: int = 4
    global_limit: int = 16
    cache_ttl: float = 3600.0
    registry_bases: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_REGISTRY_BASES))
    github_token: str | None = field(default_factory=lambda: os.environ.get("DRIFTMON_GITHUB_TOKEN"))
    clock: Callable[[], float] = field(default=time.time, repr=False)

    def base(self, name: str) -> str:
        return self.registry_bases.get(name, DEFAULT_REGISTRY_BASES[name]).rstrip("/")


# ---------------------------------------------------------------------------
# Transport with cache and per-host limits
# ---------------------------------------------------------------------------


@dataclass
class _Response:
    status: int
    location: str | None
    body: object = None
    link: str | None = None


class ResponseCache:
    """URL-keyed response cache, in memory and optionally on disk."""

    def __init__(self, cache_dir: str | None, ttl: float, clock: Callable[[], float]):
        self.dir = Path(cache_dir) if cache_dir else None
        self.ttl = ttl
        self.clock = clock
        self._mem: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.dir / (hashlib.sha1(key.encode("utf-8")).hexdigest() + ".json")

    def get(self, key: str) -> dict | None:
        entry = self._mem.get(key)
        if entry is None and self.dir:
            path = self._path(key)
            if path.exists():
                try:
                    entry = json.loads(path.read_text("utf-8"))
                except (OSError, ValueError):
                    entry = None
        if entry is None or self.clock() - entry["stored_at"] > self.ttl:
            return None
        return entry

    def put(self, key: str, entry: dict) -> None:
        entry = dict(entry, stored_at=self.clock())
        with self._lock:
            self._mem[key] = entry
            if self.dir:
                tmp = self._path(key).with_suffix(".tmp")
                tmp.write_text(json.dumps(entry, sort_keys=True), "utf-8")
                tmp.replace(self._path(key))


class Transport:
    def __init__(self, policy: ProbePolicy):
        self.policy = policy
        self.cache = ResponseCache(policy.cache_dir, policy.cache_ttl, policy.clock)
        self._hosts: dict[str, threading.BoundedSemaphore] = {}
        self._hosts_lock = threading.Lock()

    def _host_slot(self, url: str) -> threading.BoundedSemaphore:
        host = urlsplit(url).netloc.lower()
        with self._hosts_lock:
            if host not in self._hosts:
                self._hosts[host] = threading.BoundedSemaphore(max(1, self.policy.per_host_limit))
            return self._hosts[host]

    def _now(self) -> str:
        return datetime.fromtimestamp(self.policy.clock(), timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")

    def request(self, method: str, url: str, headers: dict | None = None) -> tuple[_Response, bool, str]:
        """Return (response, from_cache, fetched_at)."""
        if not self.policy.network:
            raise LiveError("NETWORK_DISABLED", url)
        key = f"{method} {url}"
        hit = self.cache.get(key)
        if hit is not None:
            resp = _Response(hit["status"], hit["location"], hit["body"], hit.get("link"))
            return resp, True, hit["fetched_at"]
        host = urlsplit(url).hostname or ""
        timeout = self.policy.timeout_ms / 1000.0
        with self._host_slot(url):
            try:
                if method == "HEAD":
                    resp = requests.head(url, allow_redirects=False, timeout=timeout, headers=headers)
                    if resp.status_code == 405:
                        resp = requests.get(
                            url, allow_redirects=False, timeout=timeout, headers=headers, stream=True
                        )
                        resp.close()
                    body = None
                else:
                    resp = requests.get(url, allow_redirects=False, timeout=timeout, headers=headers)
                    body = None
                    if resp.status_code == 200:
                        try:
                            body = resp.json()
                        except ValueError:
                            raise LiveError("MALFORMED_REGISTRY_RESPONSE", url) from None
            except requests.Timeout:
                raise LiveError("TIMEOUT", host) from None
            except requests.ConnectionError as exc:
                text = str(exc)
                if "resolve" in text.lower() or "name or service" in text.lower():
                    raise LiveError("DNS_FAILURE", host) from None
                raise LiveError("CONNECTION_ERROR", host) from None
        response = _Response(resp.status_code, resp.headers.get("Location"), body, resp.headers.get("Link"))
        fetched_at = self._now()
        self.cache.put(
            key,
            {
                "status": response.status,
                "location": response.location,
                "body": response.body,
                "link": response.link,
                "fetched_at": fetched_at,
            },
        )
        return response, False, fetched_at


# ---------------------------------------------------------------------------
# URL probes
# ---------------------------------------------------------------------------


def _is_http_url(value: str) -> bool:
    parts = urlsplit(value)
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def probe_url(url: str, policy: ProbePolicy, transport: Transport | None = None) -> LiveEvidence:
    if not _is_http_url(url):
        raise LiveError("INVALID_URL", url)
    transport = transport or Transport(policy)
    resp, cached, fetched_at = transport.request("HEAD", url)
    location = None
    if 300 <= resp.status < 400:
        location = urljoin(url, resp.location or "")
    return LiveEvidence(EvidenceSource.URL_STATUS, url, resp.status, location, fetched_at, cached)


def _path_key(url: str) -> tuple[str, str]:
    parts = urlsplit(url)
    host = (parts.hostname or "").lower()
    port = parts.port
    if port and port not in (80, 443):
        host = f"{host}:{port}"
    path = re.sub(r"/{2,}", "/", parts.path).rstrip("/")
    return host, path


def redirect_moves(original: str, location: str) -> bool:
    """Does a redirect leave the original host or path prefix?

    Scheme changes and trailing slashes are ignored; a redirect deeper
    into the same path (``/docs`` to ``/docs/en``) is not a move.
    """
    host_a, path_a = _path_key(original)
    host_b, path_b = _path_key(location)
    if host_a != host_b:
        return True
    return not (path_b == path_a or path_b.startswith(path_a + "/"))


def classify_url_evidence(ev: LiveEvidence) -> str | None:
    """Explanation for hard evidence, or None for a soft signal."""
    if ev.status in HARD_URL_STATUSES:
        return f"hard {ev.status}: {ev.target} is gone"
    if ev.status in PERMANENT_REDIRECTS and ev.redirect_location:
        if redirect_moves(ev.target, ev.redirect_location):
            return f"hard {ev.status}: {ev.target} moved to {ev.redirect_location}"
    return None


# ---------------------------------------------------------------------------
# Registry lookups
# ---------------------------------------------------------------------------


def _same_version(a: str, b: str) -> bool:
    try:
        return parse_version(a) == parse_version(b)
    except DriftmonError:
        return a == b


def _registry_evidence(target: str, verdict: RegistryVerdict, cached: bool, fetched_at: str) -> LiveEvidence:
    return LiveEvidence(EvidenceSource.REGISTRY_LOOKUP, target, verdict, None, fetched_at, cached)


def _expect_json(resp: _Response, url: str):
    body = resp.body
    if resp.status != 200 or not isinstance(body, (dict, list)):
        raise LiveError("MALFORMED_REGISTRY_RESPONSE", f"{url} -> {resp.status}")
    return body


def _check_pypi(req: Requirement, policy: ProbePolicy, tx: Transport) -> LiveEvidence:
    url = f"{policy.base('pypi')}/pypi/{quote(req.name, safe='')}/json"
    resp, cached, at = tx.request("GET", url)
    target = f"pypi:{req.name}{req.constraint}"
    if resp.status == 404:
        return _registry_evidence(target, RegistryVerdict.NOT_FOUND, cached, at)
    body = _expect_json(resp, url)
    releases = body.get("releases")
    if not isinstance(releases, dict):
        raise LiveError("MALFORMED_REGISTRY_RESPONSE", url)
    pin = req.pinned
    if pin is None:
        return _registry_evidence(target, RegistryVerdict.OK, cached, at)
    files = next((f for v, f in releases.items() if _same_version(v, pin)), None)
    if files is None:
        verdict = RegistryVerdict.VERSION_ABSENT
    elif files and all(isinstance(f, dict) and f.get("yanked") for f in files):
        verdict = RegistryVerdict.YANKED_OR_DEPRECATED
    else:
        verdict = RegistryVerdict.OK
    return _registry_evidence(target, verdict, cached, at)


def _check_npm(req: Requirement, policy: ProbePolicy, tx: Transport) -> LiveEvidence:
    url = f"{policy.base('npm')}/{quote(req.name, safe='@')}"
    resp, cached, at = tx.request("GET", url)
    target = f"npm:{req.name}@{req.constraint}"
    if resp.status == 404:
        return _registry_evidence(target, RegistryVerdict.NOT_FOUND, cached, at)
    body = _expect_json(resp, url)
    versions = body.get("versions")
    if not isinstance(versions, dict):
        raise LiveError("MALFORMED_REGISTRY_RESPONSE", url)
    pin = req.pinned
    if pin is None:
        return _registry_evidence(target, RegistryVerdict.OK, cached, at)
    meta = next((m for v, m in versions.items() if _same_version(v, pin)), None)
    if meta is None:
        verdict = RegistryVerdict.VERSION_ABSENT
    elif isinstance(meta, dict) and meta.get("deprecated"):
        verdict = RegistryVerdict.YANKED_OR_DEPRECATED
    else:
        verdict = RegistryVerdict.OK
    return _registry_evidence(target, verdict, cached, at)


_IMAGE = re.compile(
    r"^(?:docker\.io/|index\.docker\.io/)?(?:(?P<ns>[a-z0-9][a-z0-9._\-]*)/)?"
    r"(?P<name>[a-z0-9][a-z0-9._\-]*)(?::(?P<tag>[\w][\w.\-]{0,127}))?$"
)


def parse_image(value: str) -> tuple[str, str, str | None] | None:
    """(namespace, name, tag) for a Docker Hub reference, else None."""
    value = value.strip().lower()
    if "@" in value or "$" in value:
        return None
    m = _IMAGE.match(value)
    if not m:
        return None
    return m.group("ns") or "library", m.group("name"), m.group("tag")


def _check_docker(value: str, policy: ProbePolicy, tx: Transport) -> LiveEvidence | None:
    parsed = parse_image(value)
    if parsed is None:
        return None
    ns, name, tag = parsed
    repo_url = f"{policy.base('dockerhub')}/v2/repositories/{ns}/{name}"
    target = f"dockerhub:{ns}/{name}:{tag or ''}".rstrip(":")
    if tag:
        tag_url = f"{repo_url}/tags/{quote(tag, safe='')}"
        resp, cached, at = tx.request("GET", tag_url)
        if resp.status == 200:
            return _registry_evidence(target, RegistryVerdict.OK, cached, at)
        if resp.status != 404:
            raise LiveError("MALFORMED_REGISTRY_RESPONSE", f"{tag_url} -> {resp.status}")
    resp, cached, at = tx.request("GET", repo_url + "/")
    if resp.status == 404:
        return _registry_evidence(target, RegistryVerdict.NOT_FOUND, cached, at)
    _expect_json(resp, repo_url)
    verdict = RegistryVerdict.VERSION_ABSENT if tag else RegistryVerdict.OK
    return _registry_evidence(target, verdict, cached, at)


_ACTION = re.compile(r"^(?P<owner>[\w.\-]+)/(?P<repo>[\w.\-]+)(?:/[\w./\-]*)?@(?P<ref>[\w.\-/]+)$")
_NEXT_LINK = re.compile(r'<([^>]+)>\s*;\s*rel="next"')


def _check_github(value: str, policy: ProbePolicy, tx: Transport) -> LiveEvidence | None:
    m = _ACTION.match(value.strip())
    if not m:
        return None
    owner, repo, ref = m.group("owner"), m.group("repo"), m.group("ref")
    headers = {"Accept": "application/vnd.github+json"}
    if policy.github_token:
        headers["Authorization"] = f"Bearer {policy.github_token}"
    url = f"{policy.base('github')}/repos/{owner}/{repo}/tags?per_page=100"
    target = f"github:{owner}/{repo}@{ref}"
    names: set[str] = set()
    cached_all, first_at = True, ""
    pages = 0
    while url and pages < 50:
        resp, cached, at = tx.request("GET", url, headers)
        cached_all &= cached
        first_at = first_at or at
        if resp.status == 404 and pages == 0:
            return _registry_evidence(target, RegistryVerdict.NOT_FOUND, cached, at)
        body = _expect_json(resp, url)
        if not isinstance(body, list):
            raise LiveError("MALFORMED_REGISTRY_RESPONSE", url)
        names.update(t.get("name") for t in body if isinstance(t, dict))
        nxt = _NEXT_LINK.search(resp.link or "")
        url = nxt.group(1) if nxt else None
        pages += 1
    if not re.match(r"^v?\d", ref):
        # branches and SHAs are not tags; repository existence is all we know
        return _registry_evidence(target, RegistryVerdict.OK, cached_all, first_at)
    verdict = RegistryVerdict.OK if ref in names else RegistryVerdict.VERSION_ABSENT
    return _registry_evidence(target, verdict, cached_all, first_at)


def check_registry(
    c: ContractRecord, policy: ProbePolicy, transport: Transport | None = None
) -> LiveEvidence | None:
    """Registry verdict for ``c``, or None when no validator applies."""
    if c.role is not Role.OPERATIONAL:
        return None
    tx = transport or Transport(policy)
    if c.contract_type is ContractType.DEPENDENCY:
        try:
            req = parse_requirement(c.value)
        except DriftmonError:
            return None
        if req.ecosystem == "npm":
            return _check_npm(req, policy, tx)
        return _check_pypi(req, policy, tx)
    if c.contract_type is ContractType.CONTAINER_IMAGE:
        return _check_docker(c.value, policy, tx)
    if c.contract_type is ContractType.CI_ACTION:
        return _check_github(c.value, policy, tx)
    return None


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


@dataclass
class LiveScan:
    violations: list[Violation]
    observations: list[dict]

    def to_dict(self) -> dict:
        return {
            "violations": [v.to_dict() for v in self.violations],
            "observations": self.observations,
        }


def _validate_one(c: ContractRecord, policy: ProbePolicy, tx: Transport):
    """Return (violation or None, observation dict or None)."""
    try:
        if c.contract_type in (ContractType.SERVICE_URL, ContractType.API_ENDPOINT) and _is_http_url(c.value):
            ev = probe_url(c.value, policy, tx)
            why = classify_url_evidence(ev)
            if why:
                return Violation(c, EvidenceKind.LIVE_URL, MatchLevel.LIVE_HARD, why, live_evidence=ev), None
            return None, {"contract_id": c.id, "signal": "soft", "evidence": ev.to_dict()}
        ev = check_registry(c, policy, tx)
        if ev is None:
            return None, None
        if ev.status in HARD_VERDICTS:
            why = f"registry {ev.status.value} for {ev.target}"
            return Violation(c, EvidenceKind.LIVE_REGISTRY, MatchLevel.LIVE_HARD, why, live_evidence=ev), None
        return None, {"contract_id": c.id, "signal": "soft", "evidence": ev.to_dict()}
    except LiveError as exc:
        return None, {"contract_id": c.id, "signal": "error", "error": exc.code, "detail": exc.detail}


def scan_live(contracts: Sequence[ContractRecord], policy: ProbePolicy) -> LiveScan:
    """Probe every operational contract; results follow contract order."""
    targets = [c for c in contracts if c.role is Role.OPERATIONAL]
    tx = Transport(policy)
    if not targets:
        return LiveScan([], [])
    with ThreadPoolExecutor(max_workers=max(1, policy.global_limit)) as pool:
        results = list(pool.map(lambda c: _validate_one(c, policy, tx), targets))
    violations = [v for v, _ in results if v is not None]
    observations = [o for _, o in results if o is not None]
    return LiveScan(violations, observations)


def validate_live(contracts: Sequence[ContractRecord], policy: ProbePolicy) -> list[Violation]:
    return scan_live(contracts, policy).violations
