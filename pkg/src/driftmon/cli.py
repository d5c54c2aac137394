"""driftmon command line.

Exit codes: 0 success, 2 usage or input error, 3 violations found
(``check``/``scan``), 1 failed verification or repair.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from driftmon import __version__
from driftmon.bench import PipelineConfig, load_corpus, run_detection
from driftmon.extract import Mode, extract_mentions
from driftmon.live import DEFAULT_REGISTRY_BASES, ProbePolicy, scan_live
from driftmon.model import DriftmonError, SkillDocument, dump_json, parse_drift_events
from driftmon.negatives import gen_formatting_negative, gen_semantic_negative
from driftmon.repair import RepairOutcome, VerifierKind, run_repair_loop, verify
from driftmon.roles import (
    ClassifierConfig,
    StaticSemanticExtractor,
    extract_contracts,
    load_config,
    semantic_record,
)
from driftmon.validate import CheckResult, check_skill

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_VIOLATIONS = 0, 1, 2, 3

log = logging.getLogger("driftmon")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise DriftmonError("FILE_NOT_FOUND", path)
    return p.read_text("utf-8")


def _load_skill(path: str) -> SkillDocument:
    return SkillDocument(id=Path(path).stem, text=_read_text(path), source_path=path)


def _load_settings(args) -> dict:
    if getattr(args, "config", None):
        return load_config(args.config)
    default = Path("driftmon.toml")
    return load_config(default) if default.is_file() else {}


def _classifier(args) -> ClassifierConfig:
    return ClassifierConfig.from_mapping(_load_settings(args))


def _semantic(args, skill: SkillDocument):
    if not getattr(args, "semantic", None):
        return None
    raw = json.loads(_read_text(args.semantic))
    records = [
        semantic_record(skill, r["contract_type"], r["value"], r["quote"], r.get("role", "OPERATIONAL"))
        for r in raw
    ]
    return StaticSemanticExtractor({skill.id: records})


def _emit(args, payload: dict) -> None:
    text = dump_json(payload)
    sys.stdout.write(text)
    sys.stdout.flush()
    if getattr(args, "report", None):
        Path(args.report).write_text(text, "utf-8")


def _say(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_extract(args) -> int:
    skill = _load_skill(args.skill)
    mentions = extract_mentions(skill, args.mode)
    contracts = extract_contracts(skill, args.mode, _semantic(args, skill), _classifier(args))
    _emit(
        args,
        {
            "skill_id": skill.id,
            "mode": Mode.parse(args.mode).value,
            "mentions": [m.to_dict() for m in mentions],
            "contracts": [c.to_dict() for c in contracts],
        },
    )
    operational = sum(c.role.name == "OPERATIONAL" for c in contracts)
    _say(args, f"{skill.id}: {len(mentions)} mentions, {len(contracts)} contracts ({operational} operational)")
    return EXIT_OK


def cmd_check(args) -> int:
    skill = _load_skill(args.skill)
    drifts = parse_drift_events(_read_text(args.drifts))
    result = check_skill(
        skill, drifts, mode=args.mode, semantic=_semantic(args, skill), config=_classifier(args)
    )
    _emit(args, result.to_report())
    _say(args, f"{skill.id}: {len(result.violations)} violation(s) against {len(drifts)} drift event(s)")
    return EXIT_VIOLATIONS if result.flagged else EXIT_OK


def _policy(args) -> ProbePolicy:
    settings = _load_settings(args)
    bases = dict(DEFAULT_REGISTRY_BASES)
    bases.update(settings.get("registries", {}))
    for item in args.registry_base or []:
        name, sep, url = item.partition("=")
        if not sep or name not in DEFAULT_REGISTRY_BASES or not url:
            raise DriftmonError("BAD_REGISTRY_BASE", item)
        bases[name] = url
    return ProbePolicy(
        network=bool(args.live),
        cache_dir=args.cache_dir or os.environ.get("DRIFTMON_CACHE_DIR"),
        timeout_ms=args.timeout_ms,
        per_host_limit=args.per_host,
        registry_bases=bases,
    )


def cmd_scan(args) -> int:
    skill = _load_skill(args.skill)
    policy = _policy(args)
    contracts = extract_contracts(skill, args.mode, _semantic(args, skill), _classifier(args))
    if policy.network:
        live = scan_live(contracts, policy)
        violations, observations = live.violations, live.observations
    else:
        violations, observations = [], []
    report = CheckResult(skill, contracts, violations).to_report()
    report["observations"] = observations
    report["network"] = policy.network
    _emit(args, report)
    if not policy.network:
        _say(args, f"{skill.id}: network disabled, nothing probed (pass --live)")
    else:
        _say(args, f"{skill.id}: {len(violations)} live violation(s), {len(observations)} observation(s)")
    return EXIT_VIOLATIONS if violations else EXIT_OK


def cmd_verify_repair(args) -> int:
    _read_text(args.original)
    repaired = _read_text(args.repaired)
    drifts = parse_drift_events(_read_text(args.drifts))
    kind = VerifierKind.TYPE_AWARE if args.type_aware else VerifierKind.LITERAL
    result = verify(repaired, drifts, kind)
    _emit(args, result.to_dict())
    _say(args, f"{kind.value}: {'passed' if result.passed else 'failed'}")
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_repair(args) -> int:
    skill = _load_skill(args.skill)
    drifts = parse_drift_events(_read_text(args.drifts))
    check = check_skill(skill, drifts, mode=args.mode, semantic=_semantic(args, skill), config=_classifier(args))
    if not check.violations:
        _emit(args, {"outcome": "NOTHING_TO_REPAIR", "attempts": 0, "log": [], "spec": None})
        _say(args, f"{skill.id}: no violations, nothing to repair")
        return EXIT_OK
    kind = VerifierKind.TYPE_AWARE if args.type_aware else VerifierKind.LITERAL
    result = run_repair_loop(skill, check.violations, verifier=kind)
    if result.outcome is RepairOutcome.REPAIRED and args.out:
        Path(args.out).write_text(result.final_text, "utf-8")
    _emit(args, result.to_dict())
    _say(args, f"{skill.id}: {result.outcome.value} after {result.attempts} attempt(s)")
    return EXIT_OK if result.outcome is RepairOutcome.REPAIRED else EXIT_FAIL


def cmd_bench(args) -> int:
    cases = load_corpus(args.corpus)
    config = PipelineConfig(
        mode=Mode.parse(args.mode), classifier=_classifier(args), bootstrap=args.bootstrap, seed=args.seed
    )
    metrics = run_detection(cases, config)
    _emit(args, metrics.to_dict())
    _say(
        args,
        f"{len(cases)} cases: tp={metrics.tp} fp={metrics.fp} fn={metrics.fn} tn={metrics.tn} "
        f"precision={metrics.precision:.3f} recall={metrics.recall:.3f} fpr={metrics.fpr:.3f}",
    )
    return EXIT_OK


def cmd_negatives(args) -> int:
    skill = _load_skill(args.skill)
    gen = gen_formatting_negative if args.kind == "formatting" else gen_semantic_negative
    out = Path(args.out)
    (out / "skills").mkdir(parents=True, exist_ok=True)
    cases = []
    for seed in range(args.seed, args.seed + args.count):
        case = gen(skill, seed)
        rel = f"skills/{case.case_id}.md"
        (out / rel).write_text(case.skill.text, "utf-8")
        entry = case.to_dict(inline_text=False)
        entry["skill"] = {"id": case.skill.id, "path": rel, "metadata": dict(case.skill.metadata)}
        cases.append(entry)
    (out / "corpus.json").write_text(dump_json(cases), "utf-8")
    _emit(args, {"kind": args.kind, "count": len(cases), "corpus": str(out / "corpus.json")})
    _say(args, f"wrote {len(cases)} {args.kind} negative(s) to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="driftmon", description="Monitor skill documents for environment drift.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", help="also write the JSON report to this path")
    common.add_argument("--quiet", action="store_true", help="suppress the human-readable summary")
    common.add_argument("--config", help="driftmon.toml with classifier cues and registry bases")

    pipeline = argparse.ArgumentParser(add_help=False)
    pipeline.add_argument("--mode", default="full15", type=str.upper, choices=["BASE7", "FULL15"])
    pipeline.add_argument("--semantic", help="JSON list of semantic records for this skill")

    p = sub.add_parser("extract", parents=[common, pipeline], help="list mentions and contracts")
    p.add_argument("skill")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("check", parents=[common, pipeline], help="validate against known drift events")
    p.add_argument("skill")
    p.add_argument("--drifts", required=True, help="drifts.json")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("scan", parents=[common, pipeline], help="validate against live evidence")
    p.add_argument("skill")
    net = p.add_mutually_exclusive_group()
    net.add_argument("--live", action="store_true", help="allow network probes")
    net.add_argument("--no-network", dest="live", action="store_false", help="no probes (default)")
    p.add_argument("--cache-dir")
    p.add_argument("--timeout-ms", type=int, default=5000)
    p.add_argument("--per-host", type=int, default=4)
    p.add_argument("--registry-base", action="append", metavar="NAME=URL",
                   help="override a registry endpoint (pypi, npm, dockerhub, github)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("verify-repair", parents=[common], help="check a repaired document")
    p.add_argument("--original", required=True)
    p.add_argument("--repaired", required=True)
    p.add_argument("--drifts", required=True)
    p.add_argument("--type-aware", action="store_true")
    p.set_defaults(func=cmd_verify_repair)

    p = sub.add_parser("repair", parents=[common, pipeline], help="repair with the substitution generator")
    p.add_argument("skill")
    p.add_argument("--drifts", required=True)
    p.add_argument("--type-aware", action="store_true")
    p.add_argument("--out", help="write the repaired document here")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("bench", parents=[common], help="score a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", default="full15", type=str.upper, choices=["BASE7", "FULL15"])
    p.add_argument("--bootstrap", type=int, default=10_000, metavar="B")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("negatives", parents=[common], help="generate hard negatives from a skill")
    p.add_argument("--skill", required=True)
    p.add_argument("--kind", required=True, choices=["formatting", "semantic"])
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_negatives)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except DriftmonError as exc:
        print(f"driftmon: error: {exc.code}: {exc.detail}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        print(f"driftmon: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
