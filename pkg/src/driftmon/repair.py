"""Repair specifications, the candidate loop and the two verifiers."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, Sequence

from driftmon.model import (
    DriftEvent,
    DriftmonError,
    DriftType,
    EvidenceKind,
    SkillDocument,
    Span,
    Violation,
    ContractRecord,
)
from driftmon.versions import find_constraints, parse_requirement, satisfies

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURES = (0.0, 0.2)

INSTRUCTIONS: dict[DriftType, str] = {
    DriftType.URL_CHANGE: "point every reference at the new URL and keep link text consistent",
    DriftType.VERSION_BUMP: "update the pinned version and any install commands that repeat it",
    DriftType.CONFIG_CHANGE: "replace the configuration key or file name wherever it is read or written",
    DriftType.API_MIGRATION: "move calls to the new endpoint and adjust request and response handling",
    DriftType.DEPRECATION: "remove or replace the deprecated reference",
    DriftType.SCHEMA_CHANGE: "rename the field in examples, payloads and parsing code",
    DriftType.AUTH_CHANGE: "update the authentication flow, header names and credential variables",
    DriftType.DEPENDENCY_UPDATE: "update the pinned constraint and cascade any import or lockfile references",
}


@dataclass(frozen=True)
class RepairItem:
    contract: ContractRecord
    span: Span
    quote: str
    drift: DriftEvent
    category_instructions: str

    @property
    def old_value(self) -> str:
        return self.drift.old_value

    @property
    def new_value(self) -> str | None:
        return self.drift.new_value

    def to_dict(self) -> dict:
        return {
            "contract_id": self.contract.id,
            "evidence": {"span": self.span.to_list(), "text": self.quote},
            "drift_type": self.drift.drift_type.name,
            "old_value": self.old_value,
            "new_value": self.new_value,
            "category_instructions": self.category_instructions,
        }


@dataclass(frozen=True)
class RepairSpec:
    skill_text: str
    items: tuple[RepairItem, ...]
    generation_temperatures: tuple[float, ...] = DEFAULT_TEMPERATURES

    @property
    def drifts(self) -> list[DriftEvent]:
        """Implicated drift events, deduplicated in item order."""
        seen, out = set(), []
        for item in self.items:
            key = (item.drift.drift_type, item.old_value, item.new_value)
            if key not in seen:
                seen.add(key)
                out.append(item.drift)
        return out

    def to_dict(self) -> dict:
        return {
            "items": [i.to_dict() for i in self.items],
            "generation_temperatures": list(self.generation_temperatures),
        }


def _drift_for(v: Violation) -> DriftEvent:
    if v.drift is not None:
        return v.drift
    # live evidence carries no event; describe the falsified value instead
    if v.evidence_kind is EvidenceKind.LIVE_URL:
        ev = v.live_evidence
        new = ev.redirect_location if ev is not None else None
        return DriftEvent(DriftType.URL_CHANGE, v.contract.value, new, source="live")
    return DriftEvent(DriftType.DEPRECATION, v.contract.value, None, source="live")


def build_repair_spec(
    skill: SkillDocument,
    violations: Sequence[Violation],
    temperatures: Sequence[float] = DEFAULT_TEMPERATURES,
) -> RepairSpec:
    if not violations:
        raise DriftmonError("EMPTY_VIOLATIONS")
    items = []
    for v in violations:
        if v.contract.skill_id and v.contract.skill_id != skill.id:
            raise DriftmonError("SKILL_MISMATCH", f"{v.contract_id} belongs to {v.contract.skill_id}")
        drift = _drift_for(v)
        items.append(
            RepairItem(
                contract=v.contract,
                span=v.contract.evidence.span,
                quote=v.contract.evidence.text,
                drift=drift,
                category_instructions=INSTRUCTIONS[drift.drift_type],
            )
        )
    return RepairSpec(skill.text, tuple(items), tuple(temperatures))


class RepairGenerator(Protocol):
    def generate(self, spec: RepairSpec, temperature: float) -> str: ...


class SubstitutionGenerator:
    """Offline generator: replace every occurrence of each old value.

    Drifts without a new value have the lines mentioning them dropped.
    Temperature is ignored.
    """

    def generate(self, spec: RepairSpec, temperature: float) -> str:
        text = spec.skill_text
        for drift in spec.drifts:
            if drift.new_value is not None:
                text = text.replace(drift.old_value, drift.new_value)
            else:
                text = "".join(
                    line for line in text.splitlines(keepends=True) if drift.old_value not in line
                )
        return text


class VerifierKind(str, Enum):
    LITERAL = "LITERAL"
    TYPE_AWARE = "TYPE_AWARE"


@dataclass(frozen=True)
class DriftCheck:
    drift: DriftEvent
    new_present: bool
    old_absent: bool

    def to_dict(self) -> dict:
        return {
            "drift": self.drift.to_dict(),
            "new_present": self.new_present,
            "old_absent": self.old_absent,
        }


@dataclass(frozen=True)
class VerifierResult:
    passed: bool
    per_drift: tuple[DriftCheck, ...]
    verifier: VerifierKind
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "verifier": self.verifier.value,
            "per_drift": [c.to_dict() for c in self.per_drift],
            "notes": list(self.notes),
        }


def _literal_check(repaired: str, d: DriftEvent) -> DriftCheck:
    new_present = d.new_value is None or d.new_value in repaired
    return DriftCheck(d, new_present, d.old_value not in repaired)


def verify_literal(repaired: str, drifts: Sequence[DriftEvent]) -> VerifierResult:
    checks = tuple(_literal_check(repaired, d) for d in drifts)
    passed = all(c.new_present and c.old_absent for c in checks)
    return VerifierResult(passed, checks, VerifierKind.LITERAL)


_VERSIONED = frozenset({DriftType.DEPENDENCY_UPDATE, DriftType.VERSION_BUMP})


def _range_accepts(repaired: str, new_value: str) -> bool:
    req = parse_requirement(new_value)
    wanted = req.target_version()
    for expr in find_constraints(repaired, req.name):
        try:
            if satisfies(wanted, expr):
                return True
        except DriftmonError:
            continue
    return False


def verify_type_aware(repaired: str, drifts: Sequence[DriftEvent]) -> VerifierResult:
    """Literal check, plus version-range acceptance for dependency drifts."""
    checks, notes = [], []
    for d in drifts:
        check = _literal_check(repaired, d)
        if not check.new_present and d.drift_type in _VERSIONED and d.new_value:
            try:
                if _range_accepts(repaired, d.new_value):
                    check = DriftCheck(d, True, check.old_absent)
            except DriftmonError as exc:
                notes.append(f"{d.new_value!r}: {exc.code}, literal check kept")
                log.info("type-aware check downgraded for %r: %s", d.new_value, exc)
        checks.append(check)
    passed = all(c.new_present and c.old_absent for c in checks)
    return VerifierResult(passed, tuple(checks), VerifierKind.TYPE_AWARE, tuple(notes))


def verify(repaired: str, drifts: Sequence[DriftEvent], kind: VerifierKind | str) -> VerifierResult:
    if VerifierKind(kind) is VerifierKind.TYPE_AWARE:
        return verify_type_aware(repaired, drifts)
    return verify_literal(repaired, drifts)


class RepairOutcome(str, Enum):
    REPAIRED = "REPAIRED"
    FAILED = "FAILED"


@dataclass
class RepairResult:
    outcome: RepairOutcome
    final_text: str | None
    attempts: int
    log: list[dict] = field(default_factory=list)
    spec: RepairSpec | None = None

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "attempts": self.attempts,
            "log": self.log,
            "spec": self.spec.to_dict() if self.spec else None,
        }


def run_repair_loop(
    skill: SkillDocument,
    violations: Sequence[Violation],
    gen: RepairGenerator | None = None,
    verifier: VerifierKind | str = VerifierKind.LITERAL,
    temperatures: Sequence[float] = DEFAULT_TEMPERATURES,
) -> RepairResult:
    """Try one candidate per temperature and keep the first that verifies."""
    spec = build_repair_spec(skill, violations, temperatures)
    gen = gen or SubstitutionGenerator()
    attempts, entries = 0, []
    for temp in spec.generation_temperatures:
        attempts += 1
        try:
            candidate = gen.generate(spec, temp)
        except Exception as exc:  # generator failures are per attempt
            entries.append({"temperature": temp, "passed": False, "error": repr(exc)})
            continue
        result = verify(candidate, spec.drifts, verifier)
        entries.append({"temperature": temp, "passed": result.passed, "error": None})
        if result.passed:
            return RepairResult(RepairOutcome.REPAIRED, candidate, attempts, entries, spec)
    return RepairResult(RepairOutcome.FAILED, None, attempts, entries, spec)
