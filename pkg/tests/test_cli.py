import json

import pytest

from driftmon.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, EXIT_VIOLATIONS, main
from driftmon.schemas import validate_payload
from tests.conftest import FIXTURES, SKILLS_DIR

SKILL = "# Setup\n\nInstall the client:\n\n```bash\npip install requests==2.28.0\n```\n"
BUMP = [{"drift_type": "VERSION_BUMP", "old_value": "requests==2.28.0", "new_value": "requests==2.31.0", "source": "manual"}]


@pytest.fixture
def files(tmp_path):
    skill = tmp_path / "skill.md"
    skill.write_text(SKILL)
    drifts = tmp_path / "drifts.json"
    drifts.write_text(json.dumps(BUMP))
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    return {"skill": str(skill), "drifts": str(drifts), "empty": str(empty), "dir": tmp_path}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCheck:
    def test_violation(self, files, capsys):
        code, out, err = run(capsys, "check", files["skill"], "--drifts", files["drifts"])
        assert code == EXIT_VIOLATIONS
        report = json.loads(out)
        validate_payload("check_report", report)
        assert len(report["violations"]) == 1
        assert "1 violation" in err

    def test_clean(self, files, capsys):
        code, out, _ = run(capsys, "check", files["skill"], "--drifts", files["empty"], "--quiet")
        assert code == EXIT_OK
        assert json.loads(out)["violations"] == []

    def test_report_file_matches_stdout(self, files, capsys):
        report = files["dir"] / "r.json"
        _, out, _ = run(capsys, "check", files["skill"], "--drifts", files["drifts"], "--report", str(report))
        assert report.read_text() == out

    def test_base7_mode(self, files, capsys):
        code, out, _ = run(capsys, "check", files["skill"], "--drifts", files["drifts"], "--mode", "base7")
        assert code == EXIT_VIOLATIONS
        assert len(json.loads(out)["violations"]) == 1


class TestUsageErrors:
    def test_no_subcommand(self, capsys):
        assert main([]) == EXIT_USAGE

    def test_unknown_flag(self, files, capsys):
        assert main(["check", files["skill"], "--drifts", files["drifts"], "--bogus"]) == EXIT_USAGE
        assert "usage" in capsys.readouterr().err

    def test_missing_file(self, files, capsys):
        code, _, err = run(capsys, "check", "nope.md", "--drifts", files["drifts"])
        assert code == EXIT_USAGE
        assert "FILE_NOT_FOUND" in err

    def test_bad_drifts(self, files, capsys):
        bad = files["dir"] / "bad.json"
        bad.write_text('[{"drift_type": "SHRUG", "old_value": "x"}]')
        code, _, err = run(capsys, "check", files["skill"], "--drifts", str(bad))
        assert code == EXIT_USAGE

    def test_bad_mode(self, files, capsys):
        assert main(["extract", files["skill"], "--mode", "all"]) == EXIT_USAGE


class TestExtract:
    def test_report(self, files, capsys):
        code, out, _ = run(capsys, "extract", files["skill"])
        report = json.loads(out)
        validate_payload("extract_report", report)
        assert code == EXIT_OK
        assert [c["value"] for c in report["contracts"]] == ["requests==2.28.0"]


class TestScan:
    def test_offline_default(self, files, capsys, no_network):
        code, out, err = run(capsys, "scan", str(SKILLS_DIR / "openai-chat.md"))
        report = json.loads(out)
        assert code == EXIT_OK
        assert report["network"] is False and report["observations"] == []
        assert "--live" in err

    def test_live_against_stub(self, tmp_path, capsys):
        from driftmon.stub import StubRoute, StubServer

        with StubServer({"/ok": StubRoute(200), "/gone": StubRoute(404)}) as server:
            skill = tmp_path / "s.md"
            skill.write_text(f"```bash\ncurl {server.url('/ok')}\ncurl {server.url('/gone')}\n```\n")
            gone = server.url("/gone")
            code, out, _ = run(capsys, "scan", str(skill), "--live", "--timeout-ms", "2000")
        report = json.loads(out)
        assert code == EXIT_VIOLATIONS
        values = {c["id"]: c["value"] for c in report["contracts"]}
        assert [values[v["contract_id"]] for v in report["violations"]] == [gone]
        assert report["violations"][0]["evidence_kind"] == "LIVE_URL"


class TestRepair:
    def test_repair_writes_out(self, files, capsys):
        target = files["dir"] / "fixed.md"
        code, out, _ = run(capsys, "repair", files["skill"], "--drifts", files["drifts"], "--out", str(target))
        report = json.loads(out)
        validate_payload("repair_report", report)
        assert code == EXIT_OK and report["outcome"] == "REPAIRED"
        assert "requests==2.31.0" in target.read_text()

        code, out, _ = run(
            capsys, "verify-repair", "--original", files["skill"], "--repaired", str(target), "--drifts", files["drifts"]
        )
        assert code == EXIT_OK
        validate_payload("verifier_result", json.loads(out))

    def test_nothing_to_repair(self, files, capsys):
        code, out, _ = run(capsys, "repair", files["skill"], "--drifts", files["empty"])
        assert code == EXIT_OK
        assert json.loads(out)["outcome"] == "NOTHING_TO_REPAIR"

    def test_verify_unrepaired(self, files, capsys):
        code, out, _ = run(
            capsys, "verify-repair", "--original", files["skill"], "--repaired", files["skill"],
            "--drifts", files["drifts"], "--type-aware",
        )
        assert code == EXIT_FAIL
        assert json.loads(out)["passed"] is False


class TestBench:
    def test_fixture_corpus(self, capsys):
        code, out, err = run(capsys, "bench", "--corpus", str(FIXTURES / "corpus.json"), "--seed", "7", "--bootstrap", "500")
        metrics = json.loads(out)
        validate_payload("metrics", metrics)
        assert code == EXIT_OK
        assert (metrics["tp"], metrics["fp"], metrics["fn"], metrics["tn"]) == (7, 0, 0, 5)
        assert "12 cases" in err

    def test_repeatable(self, capsys):
        argv = ["bench", "--corpus", str(FIXTURES / "corpus.json"), "--seed", "7", "--bootstrap", "500", "--quiet"]
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second


class TestNegatives:
    @pytest.mark.parametrize("kind", ["formatting", "semantic"])
    def test_generates_loadable_corpus(self, kind, tmp_path, capsys):
        out_dir = tmp_path / kind
        code, out, _ = run(
            capsys, "negatives", "--skill", str(SKILLS_DIR / "node-ci.md"), "--kind", kind, "--count", "3", "--out", str(out_dir)
        )
        assert code == EXIT_OK and json.loads(out)["count"] == 3
        assert len(list((out_dir / "skills").glob("*.md"))) == 3

        code, out, _ = run(capsys, "bench", "--corpus", str(out_dir / "corpus.json"), "--bootstrap", "0")
        metrics = json.loads(out)
        assert (metrics["fp"], metrics["tn"]) == (0, 3)
