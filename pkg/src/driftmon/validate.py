"""Known-drift validation: role filter first, then the match grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from driftmon.matcher import match
from driftmon.model import (
    ContractRecord,
    DriftEvent,
    EvidenceKind,
    Role,
    SkillDocument,
    Violation,
)
from driftmon.roles import ClassifierConfig, SemanticExtractor, extract_contracts


def validate_known(
    contracts: Sequence[ContractRecord], drifts: Sequence[DriftEvent]
) -> list[Violation]:
    """One violation per matching (operational contract, drift) pair.

    Ordered by contract evidence start, then drift input order.
    """
    ordered = sorted(
        enumerate(contracts), key=lambda ic: (ic[1].evidence.span.start, ic[0])
    )
    violations = []
    for _, contract in ordered:
        if contract.role is not Role.OPERATIONAL:
            continue
        for drift in drifts:
            result = match(contract, drift)
            if not result.matched:
                continue
            shared = ", ".join(result.shared_tokens) or "-"
            violations.append(
                Violation(
                    contract=contract,
                    evidence_kind=EvidenceKind.KNOWN_DRIFT,
                    match_level=result.level,
                    drift=drift,
                    explanation=(
                        f"{result.level.name} match: {contract.contract_type.name} "
                        f"{contract.value!r} vs {drift.drift_type.name} old value "
                        f"{drift.old_value!r} (shared tokens: {shared})"
                    ),
                )
            )
    return violations


def flag_skill(violations: Sequence[Violation]) -> bool:
    return len(violations) > 0


@dataclass
class CheckResult:
    skill: SkillDocument
    contracts: list[ContractRecord]
    violations: list[Violation]

    @property
    def flagged(self) -> bool:
        return flag_skill(self.violations)

    def to_report(self) -> dict:
        referenced = {v.contract_id for v in self.violations}
        return {
            "skill_id": self.skill.id,
            "violations": [v.to_dict() for v in self.violations],
            "contracts": [c.to_dict() for c in self.contracts if c.id in referenced],
            "summary": {
                "contracts": len(self.contracts),
                "operational": sum(c.role is Role.OPERATIONAL for c in self.contracts),
                "violations": len(self.violations),
                "flagged": self.flagged,
            },
        }


def check_skill(
    skill: SkillDocument,
    drifts: Sequence[DriftEvent],
    *,
    mode="FULL15",
    semantic: SemanticExtractor | None = None,
    config: ClassifierConfig = ClassifierConfig(),
) -> CheckResult:
    """Extract contracts from ``skill`` and validate them against ``drifts``."""
    contracts = extract_contracts(skill, mode, semantic, config)
    return CheckResult(skill, contracts, validate_known(contracts, drifts))
