"""Regenerate the JSON corpora under fixtures/ from the skill documents.

Run from anywhere: ``python fixtures/build_fixtures.py``. Output is
deterministic; the committed files should not change on a rerun.
"""

from __future__ import annotations

import json
from pathlib import Path

from driftmon.model import SkillDocument
from driftmon.negatives import gen_formatting_negative, gen_semantic_negative, split_sections

HERE = Path(__file__).resolve().parent
SKILLS = HERE / "skills"


def ev(drift_type, old, new=None, source="fixture"):
    out = {"drift_type": drift_type, "old_value": old, "source": source}
    if new is not None:
        out["new_value"] = new
    return out


def skill_ref(name):
    return {"id": name, "path": f"skills/{name}.md"}


# one controlled drift per skill; half of them are only visible to the
# extended pattern families
RECALL = [
    ("aws-s3-sync", ev("CONFIG_CHANGE", "us-east-1", "us-east-2")),
    ("azure-blob-upload", ev("CONFIG_CHANGE", "westeurope", "swedencentral")),
    ("compose-postgres", ev("VERSION_BUMP", "postgres:16.1-alpine", "postgres:17.0-alpine")),
    ("fastapi-service", ev("VERSION_BUMP", "fastapi==0.109.0", "fastapi==0.110.0")),
    ("git-release-branch", ev("CONFIG_CHANGE", "origin/main", "origin/trunk")),
    ("helm-deploy", ev("CONFIG_CHANGE", "values-staging.yaml", "values.staging.yaml")),
    ("mlflow-tracking", ev("CONFIG_CHANGE", "MLFLOW_TRACKING_URI", "MLFLOW_TRACKING_SERVER")),
    ("node-ci", ev("DEPENDENCY_UPDATE", "jest@29.7.0", "jest@30.0.0")),
    ("openai-chat", ev("API_MIGRATION", "/v1/chat/completions", "/v1/responses")),
    ("pypi-release", ev("VERSION_BUMP", "twine==4.0.2", "twine==5.0.0")),
    ("pytorch-training", ev("VERSION_BUMP", "torch==2.1.2", "torch==2.2.0")),
    ("slack-notify", ev("AUTH_CHANGE", "SLACK_BOT_TOKEN", "SLACK_APP_TOKEN")),
    ("stripe-webhooks", ev("API_MIGRATION", "/v1/refunds", "/v2/refunds")),
    ("terraform-gcp", ev("CONFIG_CHANGE", "europe-west1", "europe-west4")),
]

# several independent substitutions in one document, for subset tests
REPAIR_MULTI = [
    (
        "pypi-release",
        [
            ev("VERSION_BUMP", "twine==4.0.2", "twine==5.0.0"),
            ev("VERSION_BUMP", "build==1.0.3", "build==1.1.0"),
            ev("DEPENDENCY_UPDATE", "setuptools>=68,<70", "setuptools>=69,<71"),
        ],
    ),
    (
        "node-ci",
        [
            ev("DEPENDENCY_UPDATE", "jest@29.7.0", "jest@30.0.0"),
            ev("VERSION_BUMP", "codecov/codecov-action@v3.1.4", "codecov/codecov-action@v4.0.1"),
            ev("VERSION_BUMP", "actions/checkout@v4", "actions/checkout@v5"),
        ],
    ),
    (
        "aws-s3-sync",
        [
            ev("CONFIG_CHANGE", "us-east-1", "us-east-2"),
            ev("VERSION_BUMP", "boto3==1.34.11", "boto3==1.35.0"),
            ev("API_MIGRATION", "--profile", "--aws-profile"),
            ev("CONFIG_CHANGE", "AWS_DEFAULT_REGION", "AWS_REGION"),
        ],
    ),
    (
        "stripe-webhooks",
        [
            ev("API_MIGRATION", "/v1/refunds", "/v2/refunds"),
            ev("VERSION_BUMP", "stripe@14.10.0", "stripe@15.0.0"),
            ev("CONFIG_CHANGE", "STRIPE_WEBHOOK_SECRET", "STRIPE_SIGNING_SECRET"),
        ],
    ),
]


def recall_corpus():
    return [
        {
            "case_id": f"ctl-{name}",
            "split": "CONTROLLED_DRIFT",
            "skill": skill_ref(name),
            "drift_events": [event],
            "label": True,
            "drift_type": event["drift_type"],
        }
        for name, event in RECALL
    ]


def repair_corpus():
    cases = [
        {"case_id": f"rep-{name}-1", "skill": skill_ref(name), "drift_events": [event]}
        for name, event in RECALL
    ]
    cases += [
        {"case_id": f"rep-{name}-{len(events)}", "skill": skill_ref(name), "drift_events": events}
        for name, events in REPAIR_MULTI
    ]
    return cases


def _load(name):
    path = SKILLS / f"{name}.md"
    return SkillDocument(id=name, text=path.read_text("utf-8"), source_path=str(path))


def identity_corpus():
    """Unchanged skills and section excerpts with no drift events."""
    names = sorted(p.stem for p in SKILLS.glob("*.md"))
    cases = []
    for name in names:
        cases.append(
            {"case_id": f"id-{name}", "split": "IDENTITY", "skill": skill_ref(name), "drift_events": [], "label": False}
        )
    excerpts = []
    for name in names:
        preamble, sections = split_sections(_load(name).text)
        for i, section in enumerate(sections):
            excerpts.append((name, i, preamble.rstrip("\n") + "\n\n" + section))
    # interleave skills so the 35 excerpts are spread over every document
    excerpts.sort(key=lambda e: (e[1], e[0]))
    for name, i, text in excerpts[: 49 - len(cases)]:
        cases.append(
            {
                "case_id": f"id-{name}-s{i}",
                "split": "IDENTITY",
                "skill": {"id": f"{name}-s{i}", "text": text},
                "drift_events": [],
                "label": False,
            }
        )
    return cases


def _generated(case):
    return case.to_dict(inline_text=True)


def main_corpus():
    """A small mixed corpus touching every split."""
    cases = [
        {
            "case_id": "ctl-pypi-twine",
            "split": "CONTROLLED_DRIFT",
            "skill": skill_ref("pypi-release"),
            "drift_events": [ev("VERSION_BUMP", "twine==4.0.2", "twine==5.0.0")],
            "label": True,
            "drift_type": "VERSION_BUMP",
        },
        {
            "case_id": "ctl-compose-postgres",
            "split": "CONTROLLED_DRIFT",
            "skill": skill_ref("compose-postgres"),
            "drift_events": [ev("VERSION_BUMP", "postgres:16.1-alpine", "postgres:17.0-alpine")],
            "label": True,
            "drift_type": "VERSION_BUMP",
        },
        {
            "case_id": "ctl-node-jest",
            "split": "CONTROLLED_DRIFT",
            "skill": skill_ref("node-ci"),
            "drift_events": [ev("DEPENDENCY_UPDATE", "jest@29.7.0", "jest@30.0.0")],
            "label": True,
            "drift_type": "DEPENDENCY_UPDATE",
        },
        {
            "case_id": "ctl-openai-schema",
            "split": "CONTROLLED_DRIFT",
            "skill": skill_ref("openai-chat"),
            "drift_events": [ev("SCHEMA_CHANGE", "choices[0].message.content", "output[0].content[0].text")],
            "label": True,
            "drift_type": "SCHEMA_CHANGE",
            "semantic_records": [
                {
                    "contract_type": "SCHEMA_FIELD",
                    "value": "choices[0].message.content",
                    "quote": "choices[0].message.content",
                    "role": "OPERATIONAL",
                }
            ],
        },
        {
            "case_id": "ctl-stripe-signature",
            "split": "CONTROLLED_DRIFT",
            "skill": skill_ref("stripe-webhooks"),
            "drift_events": [ev("AUTH_CHANGE", "stripe-signature", "stripe-webhook-signature")],
            "label": True,
            "drift_type": "AUTH_CHANGE",
            "semantic_records": [
                {
                    "contract_type": "AUTHENTICATION",
                    "value": "stripe-signature",
                    "quote": "req.headers['stripe-signature']",
                    "role": "OPERATIONAL",
                }
            ],
        },
        {
            "case_id": "rw-mlflow-host",
            "split": "REAL_WORLD_DRIFT",
            "skill": skill_ref("mlflow-tracking"),
            "drift_events": [
                ev("URL_CHANGE", "https://mlflow.internal.acme.dev", "https://mlflow.platform.acme.dev", "changelog")
            ],
            "label": True,
            "drift_type": "URL_CHANGE",
        },
        {
            "case_id": "rw-node-codecov",
            "split": "REAL_WORLD_DRIFT",
            "skill": skill_ref("node-ci"),
            "drift_events": [
                ev(
                    "VERSION_BUMP",
                    "codecov/codecov-action@v3.1.4",
                    "codecov/codecov-action@v4.0.1",
                    "release-feed",
                )
            ],
            "label": True,
            "drift_type": "VERSION_BUMP",
        },
        {"case_id": "id-helm-deploy", "split": "IDENTITY", "skill": skill_ref("helm-deploy"), "drift_events": [], "label": False},
        {"case_id": "id-slack-notify", "split": "IDENTITY", "skill": skill_ref("slack-notify"), "drift_events": [], "label": False},
        _generated(gen_formatting_negative(_load("terraform-gcp"), 0)),
        _generated(gen_semantic_negative(_load("pypi-release"), 3)),
        _generated(gen_semantic_negative(_load("helm-deploy"), 2)),
    ]
    return cases


def write(name, cases):
    path = HERE / name
    path.write_text(json.dumps(cases, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"{path.relative_to(HERE.parent)}: {len(cases)} cases")


def main():
    write("corpus.json", main_corpus())
    write("identity_corpus.json", identity_corpus())
    write("recall_corpus.json", recall_corpus())
    write("repair_cases.json", repair_corpus())


if __name__ == "__main__":
    main()
