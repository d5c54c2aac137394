import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftmon.extract import BASE7_FAMILIES, Mode, PatternFamily, classify_context, extract_mentions
from driftmon.model import ContextKind, DriftmonError, SkillDocument, Span


def mentions(text, mode=Mode.FULL15):
    return extract_mentions(SkillDocument("d", text), mode)


def by_family(text, family):
    return [m for m in mentions(text) if m.family is family]


class TestExamples:
    def test_pinned_requirement_in_fence(self):
        (m,) = by_family("```bash\npip install requests==2.28.0\n```\n", PatternFamily.VERSION_CONSTRAINT)
        assert m.value == "requests==2.28.0"
        assert m.context is ContextKind.CODE_FENCE

    def test_badge_url(self):
        (m,) = mentions("![build](https://img.shields.io/badge/build-passing.svg)")
        assert m.family is PatternFamily.URL
        assert m.context is ContextKind.BADGE_OR_IMAGE

    def test_github_action(self):
        (m,) = by_family("uses: actions/checkout@v4", PatternFamily.GITHUB_ACTION)
        assert m.value == "actions/checkout@v4"


class TestFamilies:
    @pytest.mark.parametrize(
        "family, text, value",
        [
            (PatternFamily.URL, "Docs at https://example.com/a/b.", "https://example.com/a/b"),
            (PatternFamily.IMPORT, "```python\nfrom botocore.config import Config\n```", "botocore.config"),
            (PatternFamily.API_PATH, "Call `POST /v1/refunds` now.", "POST /v1/refunds"),
            (PatternFamily.AUTH_PATTERN, "Send `Authorization: Bearer` with it.", "Authorization: Bearer"),
            (PatternFamily.DOCKER_IMAGE, "```bash\ndocker pull postgres:16.1-alpine\n```", "postgres:16.1-alpine"),
            (PatternFamily.ENV_VAR, "```bash\nexport AWS_REGION=us-east-1\n```", "AWS_REGION"),
            (PatternFamily.CLOUD_REGION, "Deploy to `eu-west-1` only.", "eu-west-1"),
            (PatternFamily.CLI_FLAG, "```bash\nhelm upgrade --install api .\n```", "--install"),
            (PatternFamily.CONFIG_FILENAME, "Edit `docker-compose.yml` first.", "docker-compose.yml"),
            (PatternFamily.NPM_AT_VERSION, "```bash\nnpm install jest@29.7.0\n```", "jest@29.7.0"),
            (PatternFamily.GIT_BRANCH, "Rebase on `origin/main` daily.", "origin/main"),
            (PatternFamily.DOCKER_IMAGE_TAGGED, "Use ghcr.io/acme/api:1.4.2 here.", "ghcr.io/acme/api:1.4.2"),
            (PatternFamily.BARE_SEMVER, "Requires Python 3.11 or newer.", "3.11"),
        ],
    )
    def test_positive(self, family, text, value):
        assert value in [m.value for m in by_family(text, family)]

    @pytest.mark.parametrize(
        "family, text",
        [
            (PatternFamily.URL, "no links here"),
            (PatternFamily.ENV_VAR, "The word HELLO alone is not a variable."),
            (PatternFamily.CLOUD_REGION, "We went east-ish last year."),
            (PatternFamily.BARE_SEMVER, "Section 3.2 explains the idea."),
            (PatternFamily.VERSION_CONSTRAINT, "x == y is a comparison"),
        ],
    )
    def test_negative(self, family, text):
        assert by_family(text, family) == []

    def test_base7_families(self):
        assert len(BASE7_FAMILIES) == 7
        found = {m.family for m in mentions("Use jest@29.7.0 in `eu-west-1`.", Mode.BASE7)}
        assert found <= set(BASE7_FAMILIES)


class TestContexts:
    DOC = (
        "# Title\n\n"
        "Plain prose here.\n\n"
        "```bash\necho hi  # a comment\n```\n\n"
        "![alt](https://x.io/a.png) and [label](https://y.io) and `code`\n"
        "<!-- hidden -->\n"
    )

    def _ctx(self, needle, offset=0):
        doc = SkillDocument("d", self.DOC)
        at = self.DOC.index(needle) + offset
        return classify_context(doc, doc.byte_span(at, at + 1))

    @pytest.mark.parametrize(
        "needle, kind",
        [
            ("Title", ContextKind.HEADING),
            ("Plain", ContextKind.PROSE),
            ("echo", ContextKind.CODE_FENCE),
            ("a comment", ContextKind.COMMENT),
            ("https://x.io", ContextKind.BADGE_OR_IMAGE),
            ("https://y.io", ContextKind.LINK_LABEL),
            ("code", ContextKind.INLINE_CODE),
            ("hidden", ContextKind.COMMENT),
        ],
    )
    def test_kinds(self, needle, kind):
        assert self._ctx(needle) is kind

    def test_out_of_range(self):
        doc = SkillDocument("d", "abc")
        with pytest.raises(DriftmonError) as exc:
            classify_context(doc, Span(0, 99))
        assert exc.value.code == "SPAN_OUT_OF_RANGE"


class TestProperties:
    def test_offsets_and_determinism_on_fixtures(self, skills):
        for doc in skills:
            first = extract_mentions(doc)
            assert first == extract_mentions(doc)
            for m in first:
                assert doc.slice(m.span) == m.raw

    def test_base7_subset_of_full15(self, skills):
        for doc in skills:
            base = {(m.family, m.span) for m in extract_mentions(doc, Mode.BASE7)}
            full = {(m.family, m.span) for m in extract_mentions(doc, Mode.FULL15)}
            assert base <= full

    def test_every_family_fires_on_fixtures(self, skills):
        seen = {m.family for doc in skills for m in extract_mentions(doc)}
        assert seen == set(PatternFamily)

    def test_mode_parse(self):
        assert Mode.parse("base7") is Mode.BASE7
        with pytest.raises(DriftmonError):
            Mode.parse("FULL99")

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=200))
    def test_never_fails(self, text):
        doc = SkillDocument("d", text)
        for m in extract_mentions(doc):
            assert doc.slice(m.span) == m.raw
