import json
from pathlib import Path

import pytest

from driftmon.model import DriftEvent, SkillDocument

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
SKILLS_DIR = FIXTURES / "skills"


def load_skill(name: str) -> SkillDocument:
    path = SKILLS_DIR / f"{name}.md"
    return SkillDocument(id=name, text=path.read_text("utf-8"), source_path=str(path))


def all_skills() -> list[SkillDocument]:
    return [load_skill(p.stem) for p in sorted(SKILLS_DIR.glob("*.md"))]


def repair_cases() -> list[tuple[str, SkillDocument, list[DriftEvent]]]:
    raw = json.loads((FIXTURES / "repair_cases.json").read_text("utf-8"))
    out = []
    for case in raw:
        skill = load_skill(Path(case["skill"]["path"]).stem)
        out.append((case["case_id"], skill, [DriftEvent.from_json(e) for e in case["drift_events"]]))
    return out


@pytest.fixture(scope="session")
def skills():
    return all_skills()


@pytest.fixture
def no_network(monkeypatch):
    """Fail loudly if anything tries to open a socket to a non-local host."""
    import socket

    real = socket.create_connection

    def guarded(address, *args, **kwargs):
        host = address[0]
        if host not in ("127.0.0.1", "localhost", "::1"):
            raise AssertionError(f"unexpected network access to {host}")
        return real(address, *args, **kwargs)

    monkeypatch.setattr(socket, "create_connection", guarded)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance")
        for number in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[number])
