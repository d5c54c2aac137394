import json

import pytest

from driftmon.model import DriftEvent, DriftmonError, DriftType
from driftmon.schemas import SCHEMA_NAMES, load_schema, validate_payload
from driftmon.validate import check_skill
from tests.conftest import FIXTURES, load_skill


class TestSchemas:
    @pytest.mark.parametrize("name", SCHEMA_NAMES)
    def test_loadable(self, name):
        schema = load_schema(name)
        assert schema["$schema"].startswith("https://json-schema.org/")

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            load_schema("nope")

    @pytest.mark.parametrize("name", ["corpus.json", "identity_corpus.json", "recall_corpus.json"])
    def test_fixture_corpora(self, name):
        validate_payload("corpus", json.loads((FIXTURES / name).read_text()))

    def test_drifts(self):
        events = [DriftEvent(DriftType.VERSION_BUMP, "a==1", "a==2").to_dict()]
        validate_payload("drifts", events)
        for case in json.loads((FIXTURES / "repair_cases.json").read_text()):
            validate_payload("drifts", case["drift_events"])

    def test_check_report(self):
        result = check_skill(
            load_skill("pypi-release"), [DriftEvent(DriftType.VERSION_BUMP, "twine==4.0.2", "twine==5.0.0")]
        )
        validate_payload("check_report", result.to_report())

    @pytest.mark.parametrize(
        "payload",
        [
            [{"drift_type": "VERSION_BUMP"}],
            [{"drift_type": "SHRUG", "old_value": "x"}],
            {"drift_type": "VERSION_BUMP", "old_value": "x"},
        ],
    )
    def test_bad_drifts(self, payload):
        with pytest.raises(DriftmonError) as exc:
            validate_payload("drifts", payload)
        assert exc.value.code == "SCHEMA_VIOLATION"

    def test_bad_report(self):
        with pytest.raises(DriftmonError) as exc:
            validate_payload("check_report", {"skill_id": 3})
        assert exc.value.code == "SCHEMA_VIOLATION"
