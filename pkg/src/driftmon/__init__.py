"""Extract environment contracts from agent skill documents and flag drift."""

from driftmon.model import (
    BenchCase,
    ContractRecord,
    ContractType,
    DriftEvent,
    DriftmonError,
    DriftType,
    Role,
    SkillDocument,
    Violation,
)

__version__ = "0.1.0"

__all__ = [
    "BenchCase",
    "ContractRecord",
    "ContractType",
    "DriftEvent",
    "DriftmonError",
    "DriftType",
    "Role",
    "SkillDocument",
    "Violation",
    "__version__",
]
