import pytest

from driftmon.bench import PipelineConfig, run_detection
from driftmon.model import DriftmonError, SkillDocument, Split
from driftmon.negatives import (
    contract_triples,
    gen_formatting_negative,
    gen_semantic_negative,
    mention_multiset,
    normalize_whitespace,
    reorder_sections,
    split_sections,
)
from tests.conftest import load_skill

TWO = "Intro.\n\n## One\n\n```bash\npip install requests==2.28.0\n```\n\n## Two\n\nUse `eu-west-1`.\n"


class TestFormatting:
    def test_two_sections(self):
        import random

        doc = SkillDocument("two", TWO)
        out = reorder_sections(TWO, random.Random(1))
        _, sections = split_sections(out)
        assert [s.splitlines()[0] for s in sections] == ["## Two", "## One"]
        assert mention_multiset(SkillDocument("two", out)) == mention_multiset(doc)

    def test_ordered_sections_stay(self):
        import random

        text = TWO.replace("## Two", "## Two <!-- ordered -->").replace("## One", "## One <!-- ordered -->")
        for seed in range(5):
            assert reorder_sections(text, random.Random(seed)) == text

    def test_whitespace(self):
        import random

        text = TWO.replace("Intro.", "Intro.\t  ").replace("Use", "Use  ") + "\n\n\n"
        out = normalize_whitespace(text, random.Random(0))
        assert "\t" not in out.split("```")[0]
        assert mention_multiset(SkillDocument("a", out)) == mention_multiset(SkillDocument("a", text))

    def test_single_section(self):
        with pytest.raises(DriftmonError) as exc:
            gen_formatting_negative(SkillDocument("one", "# Only\n\nText.\n"), 0)
        assert exc.value.code == "TOO_FEW_SECTIONS"

    def test_case_shape(self):
        case = gen_formatting_negative(load_skill("helm-deploy"), 4)
        assert case.split is Split.FORMATTING_NEG
        assert case.label is False and case.drift_events == ()
        assert case.case_id == "fmt-helm-deploy-4"
        assert case.metadata["transforms"]

    def test_invariance_on_fixtures(self, skills):
        for doc in skills:
            for seed in range(3):
                case = gen_formatting_negative(doc, seed)
                assert contract_triples(case.skill) == contract_triples(doc)
                assert mention_multiset(case.skill) == mention_multiset(doc)

    def test_seeded(self):
        doc = load_skill("node-ci")
        assert gen_formatting_negative(doc, 2).skill.text == gen_formatting_negative(doc, 2).skill.text


class TestSemantic:
    def test_alias_url(self):
        case = gen_semantic_negative(load_skill("helm-deploy"), 2)
        assert case.metadata["transform"] == "url_alias"
        assert case.drift_events[0].drift_type.name == "URL_CHANGE"
        assert run_detection([case], PipelineConfig(bootstrap=0)).tn == 1

    def test_commentary(self):
        case = gen_semantic_negative(load_skill("pypi-release"), 3)
        assert case.metadata["transform"] == "commentary_version"
        event = case.drift_events[0]
        assert event.old_value in case.skill.text
        assert case.metadata["sentence"] in case.skill.text
        assert run_detection([case], PipelineConfig(bootstrap=0)).tn == 1

    def test_incidental_bump(self):
        case = gen_semantic_negative(load_skill("helm-deploy"), 0)
        assert case.metadata["transform"] == "incidental_version"
        assert case.drift_events[0].old_value in case.skill.text
        assert case.metadata["original"] not in case.skill.text or case.metadata["original"] in case.metadata["changed_to"]

    def test_nothing_eligible(self):
        doc = SkillDocument("ops", "# Run\n\n```bash\nexport API_TOKEN=x\n```\n")
        with pytest.raises(DriftmonError) as exc:
            gen_semantic_negative(doc, 0)
        assert exc.value.code == "NO_ELIGIBLE_MENTION"

    def test_every_fixture_is_eligible(self, skills):
        for doc in skills:
            case = gen_semantic_negative(doc, 0)
            assert case.label is False and case.split is Split.SEMANTIC_NEG
            assert case.metadata["source"] == doc.id

    def test_seeded(self):
        doc = load_skill("aws-s3-sync")
        assert gen_semantic_negative(doc, 5).to_dict() == gen_semantic_negative(doc, 5).to_dict()
