"""Corpus loading, case-level detection runs and metrics."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from driftmon.extract import Mode, PatternFamily, extract_mentions
from driftmon.matcher import normalize
from driftmon.model import (
    BenchCase,
    DriftEvent,
    DriftmonError,
    DriftType,
    SkillDocument,
    Split,
)
from driftmon.roles import (
    FAMILY_CONTRACT_TYPE,
    ClassifierConfig,
    StaticSemanticExtractor,
    semantic_record,
)
from driftmon.schemas import validate_payload
from driftmon.stats import Interval, bootstrap_ci, wilson_ci
from driftmon.validate import check_skill

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Corpus loading
# ---------------------------------------------------------------------------


def _load_case(raw: dict, root: Path) -> BenchCase:
    case_id = raw["case_id"]
    skill_raw = raw["skill"]
    if "text" in skill_raw:
        text, source = skill_raw["text"], skill_raw.get("path", "")
    else:
        path = root / skill_raw["path"]
        if not path.is_file():
            raise DriftmonError("FILE_NOT_FOUND", f"{case_id}: {skill_raw['path']}")
        text, source = path.read_text("utf-8"), skill_raw["path"]
    skill = SkillDocument(
        id=skill_raw.get("id", case_id),
        text=text,
        source_path=source,
        metadata=skill_raw.get("metadata", {}),
    )
    try:
        events = tuple(DriftEvent.from_json(e) for e in raw.get("drift_events", []))
        records = tuple(
            semantic_record(skill, r["contract_type"], r["value"], r["quote"], r.get("role", "OPERATIONAL"))
            for r in raw.get("semantic_records", [])
        )
        drift_type = raw.get("drift_type")
        return BenchCase(
            case_id=case_id,
            split=Split.parse(raw["split"], error_code="SCHEMA_VIOLATION"),
            skill=skill,
            drift_events=events,
            label=bool(raw["label"]),
            drift_type=DriftType.parse(drift_type, error_code="UNKNOWN_DRIFT_TYPE") if drift_type else None,
            semantic_records=records,
            metadata=raw.get("metadata", {}),
        )
    except DriftmonError as exc:
        detail = exc.detail if case_id in (exc.detail or "") else f"{case_id}: {exc.detail}"
        raise DriftmonError(exc.code, detail) from None


def load_corpus(path: str | Path) -> list[BenchCase]:
    """Read ``corpus.json``; skill paths resolve relative to the file."""
    path = Path(path)
    if not path.is_file():
        raise DriftmonError("FILE_NOT_FOUND", str(path))
    try:
        payload = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise DriftmonError("MALFORMED_JSON", f"{path}: {exc}") from None
    cases = payload["cases"] if isinstance(payload, dict) and "cases" in payload else payload
    validate_payload("corpus", cases)
    seen: set[str] = set()
    out = []
    for raw in cases:
        if raw["case_id"] in seen:
            raise DriftmonError("SCHEMA_VIOLATION", f"{raw['case_id']}: duplicate case_id")
        seen.add(raw["case_id"])
        out.append(_load_case(raw, path.parent))
    return out


def dump_corpus(cases: Sequence[BenchCase]) -> list[dict]:
    return [c.to_dict() for c in cases]


# ---------------------------------------------------------------------------
# Detection and metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    mode: Mode = Mode.FULL15
    classifier: ClassifierConfig = ClassifierConfig()
    bootstrap: int = 10_000
    seed: int = 0
    confidence: float = 0.95


def _ratio(num: int, den: int, empty: float) -> float:
    return num / den if den else empty


def _counts(codes: np.ndarray) -> tuple[int, int, int, int]:
    return tuple(int(np.count_nonzero(codes == k)) for k in range(4))  # tp, fp, fn, tn


def _precision(codes) -> float:
    tp, fp, _, _ = _counts(codes)
    return _ratio(tp, tp + fp, 1.0)


def _recall(codes) -> float:
    tp, _, fn, _ = _counts(codes)
    return _ratio(tp, tp + fn, 1.0)


def _summary(tp: int, fp: int, fn: int, tn: int) -> dict:
    return {
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "tn": tn,
        "precision": _ratio(tp, tp + fp, 1.0),
        "recall": _ratio(tp, tp + fn, 1.0),
        "fpr": _ratio(fp, fp + tn, 0.0),
    }


@dataclass
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    fpr: float
    precision_ci: Interval | None
    recall_ci: Interval | None
    fpr_ci: Interval | None
    per_split: dict[str, dict] = field(default_factory=dict)
    per_drift_type: dict[str, dict] = field(default_factory=dict)
    cases: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        def iv(i):
            return i.to_dict() if i is not None else None

        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "precision": self.precision,
            "recall": self.recall,
            "fpr": self.fpr,
            "precision_ci": iv(self.precision_ci),
            "recall_ci": iv(self.recall_ci),
            "fpr_ci": iv(self.fpr_ci),
            "per_split": self.per_split,
            "per_drift_type": self.per_drift_type,
            "cases": self.cases,
        }


def _outcome(label: bool, predicted: bool) -> str:
    return {(True, True): "tp", (False, True): "fp", (True, False): "fn", (False, False): "tn"}[
        (label, predicted)
    ]


def detect_case(case: BenchCase, config: PipelineConfig) -> dict:
    """Run the known-drift pipeline on one case and return its log entry."""
    entry = {
        "case_id": case.case_id,
        "split": case.split.name,
        "drift_type": case.drift_type.name if case.drift_type else None,
        "label": case.label,
        "predicted": False,
        "violations": 0,
        "error": None,
    }
    try:
        semantic = StaticSemanticExtractor({case.skill.id: case.semantic_records})
        result = check_skill(
            case.skill, case.drift_events, mode=config.mode, semantic=semantic, config=config.classifier
        )
        entry["predicted"] = result.flagged
        entry["violations"] = len(result.violations)
    except DriftmonError as exc:
        # a crashing monitor abstains rather than alerting
        log.warning("case %s failed: %s", case.case_id, exc)
        entry["error"] = exc.code
    entry["outcome"] = _outcome(case.label, entry["predicted"])
    return entry


def metrics_from_log(entries: Sequence[dict], config: PipelineConfig = PipelineConfig()) -> Metrics:
    """Aggregate per-case log entries (already ordered) into Metrics."""
    order = {"tp": 0, "fp": 1, "fn": 2, "tn": 3}
    codes = np.array([order[e["outcome"]] for e in entries], dtype=int)
    tp, fp, fn, tn = _counts(codes)
    base = _summary(tp, fp, fn, tn)
    p_ci = r_ci = f_ci = None
    if len(entries) and config.bootstrap > 0:
        p_ci = bootstrap_ci(codes, _precision, config.bootstrap, config.confidence, config.seed)
        r_ci = bootstrap_ci(codes, _recall, config.bootstrap, config.confidence, config.seed)
    if fp + tn:
        f_ci = wilson_ci(fp, fp + tn, config.confidence)

    def breakdown(key: str) -> dict:
        groups: dict[str, list[int]] = {}
        for e, code in zip(entries, codes):
            if e.get(key):
                groups.setdefault(e[key], []).append(int(code))
        return {k: _summary(*_counts(np.array(v))) for k, v in sorted(groups.items())}

    return Metrics(
        **base,
        precision_ci=p_ci,
        recall_ci=r_ci,
        fpr_ci=f_ci,
        per_split=breakdown("split"),
        per_drift_type=breakdown("drift_type"),
        cases=list(entries),
    )


def run_detection(cases: Sequence[BenchCase], config: PipelineConfig = PipelineConfig()) -> Metrics:
    """Detect over ``cases`` (processed in case_id order) and score against labels."""
    entries = [detect_case(c, config) for c in sorted(cases, key=lambda c: c.case_id)]
    return metrics_from_log(entries, config)


# ---------------------------------------------------------------------------
# Event derivation from document pairs
# ---------------------------------------------------------------------------

FAMILY_DRIFT_TYPE: dict[PatternFamily, DriftType] = {
    PatternFamily.URL: DriftType.URL_CHANGE,
    PatternFamily.VERSION_CONSTRAINT: DriftType.VERSION_BUMP,
    PatternFamily.IMPORT: DriftType.DEPENDENCY_UPDATE,
    PatternFamily.API_PATH: DriftType.API_MIGRATION,
    PatternFamily.AUTH_PATTERN: DriftType.AUTH_CHANGE,
    PatternFamily.DOCKER_IMAGE: DriftType.VERSION_BUMP,
    PatternFamily.GITHUB_ACTION: DriftType.VERSION_BUMP,
    PatternFamily.ENV_VAR: DriftType.CONFIG_CHANGE,
    PatternFamily.CLOUD_REGION: DriftType.CONFIG_CHANGE,
    PatternFamily.CLI_FLAG: DriftType.API_MIGRATION,
    PatternFamily.CONFIG_FILENAME: DriftType.CONFIG_CHANGE,
    PatternFamily.NPM_AT_VERSION: DriftType.VERSION_BUMP,
    PatternFamily.GIT_BRANCH: DriftType.CONFIG_CHANGE,
    PatternFamily.DOCKER_IMAGE_TAGGED: DriftType.VERSION_BUMP,
    PatternFamily.BARE_SEMVER: DriftType.VERSION_BUMP,
}


def _keyed_values(doc: SkillDocument) -> dict[tuple[PatternFamily, str], list[str]]:
    out: dict[tuple[PatternFamily, str], list[str]] = {}
    for m in extract_mentions(doc, Mode.FULL15):
        try:
            head = normalize(FAMILY_CONTRACT_TYPE[m.family], m.value).head
        except DriftmonError:
            continue
        values = out.setdefault((m.family, head), [])
        if m.value not in values:
            values.append(m.value)
    return out


def derive_events_from_diff(old: SkillDocument, new: SkillDocument) -> list[DriftEvent]:
    """Syntactic drift events between two revisions of a document.

    Mentions are paired by (family, head token); within a pair, values
    only in ``old`` are zipped in order with values only in ``new``.
    """
    before, after = _keyed_values(old), _keyed_values(new)
    events = []
    for key, old_values in before.items():
        new_values = after.get(key)
        if not new_values:
            continue
        gone = [v for v in old_values if v not in new_values]
        added = [v for v in new_values if v not in old_values]
        for o, n in zip(gone, added):
            events.append(DriftEvent(FAMILY_DRIFT_TYPE[key[0]], o, n, source="diff"))
    return events
