"""Command line interface for the full pipeline.

Verb-noun subcommands drive forging, scene and dialogue generation, QC,
interview evaluation, dataset export and the HTTP service. Exit codes:
0 success, 1 validation failure, 2 provider or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import dataset, dialogue, interview, scene
from .catalog import (
    EXPECTED_COUNTS,
    KINDS,
    AspectCatalog,
    CharacterSpec,
    load_catalog,
    sample_spec,
    validate_spec,
)
from .config import Settings, build_provider, load_settings
from .errors import InvalidSpec, ProviderError, SimsForgeError
from .persona import forge_character
from .provider.base import Provider
from .store import Workspace


# ---------------------------------------------------------------------------
# plumbing

def _settings_from_args(args) -> Settings:
    settings = load_settings(getattr(args, "config", None))
    overrides = {
        "provider": getattr(args, "provider", None),
        "model": getattr(args, "model", None),
        "base_url": getattr(args, "base_url", None),
        "seed": getattr(args, "seed", None),
        "fixtures_dir": getattr(args, "fixtures_dir", None),
        "data_dir": getattr(args, "data_dir", None),
        "catalog_path": getattr(args, "catalog", None),
    }
    if getattr(args, "strict_fixtures", False):
        overrides["strict_fixtures"] = True
    return settings.merged(overrides)


def _context(args) -> tuple[Settings, Workspace, AspectCatalog, Provider]:
    settings = _settings_from_args(args)
    workspace = Workspace(settings.data_dir)
    catalog = load_catalog(settings.catalog_path)
    provider = build_provider(settings)
    return settings, workspace, catalog, provider


def _run_snapshot(settings: Settings) -> dict:
    # workspace location deliberately left out: the same run in two
    # directories must produce identical manifests
    snap = dataclasses.asdict(settings)
    snap.pop("data_dir", None)
    snap.pop("catalog_path", None)
    snap.pop("fixtures_dir", None)
    return snap


def _record_stage(workspace: Workspace, settings: Settings, stage: str, info: dict) -> None:
    manifest = workspace.load_manifest()
    snapshot = _run_snapshot(settings)
    digest = hashlib.sha256(
        json.dumps(snapshot, sort_keys=True).encode("utf-8")
    ).hexdigest()[:12]
    manifest["run_id"] = f"run-{digest}"
    manifest["config"] = snapshot
    manifest.setdefault("stages", {})[stage] = info
    workspace.save_manifest(manifest)


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _emit(args, human: str, payload: dict | list) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, ensure_ascii=False))
    else:
        print(human)


# ---------------------------------------------------------------------------
# commands

def cmd_catalog_validate(args) -> int:
    settings = _settings_from_args(args)
    catalog = load_catalog(args.path or settings.catalog_path, strict=args.strict)
    counts = {kind: len(catalog.kind(kind)) for kind in KINDS}
    ok = counts == EXPECTED_COUNTS
    _emit(
        args,
        "catalog ok: " + "/".join(str(counts[k]) for k in KINDS)
        + ("" if ok else "  (differs from the reference counts)"),
        {"counts": counts, "reference": EXPECTED_COUNTS, "matches_reference": ok},
    )
    return 0


def _specs_for_forge(args, catalog: AspectCatalog, settings: Settings) -> list[CharacterSpec]:
    if args.spec:
        raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        items = raw if isinstance(raw, list) else [raw]
        specs = [CharacterSpec.from_dict(d) for d in items]
    else:
        specs = [
            sample_spec(catalog, f"{settings.seed}:{i}")
            for i in range(args.count)
        ]
    for spec in specs:
        violations = validate_spec(catalog, spec)
        if violations:
            raise InvalidSpec(violations)
    return specs


def cmd_character_forge(args) -> int:
    settings, workspace, catalog, provider = _context(args)
    specs = _specs_for_forge(args, catalog, settings)
    created = []
    for spec in specs:
        record = forge_character(spec, provider, catalog, model=settings.model)
        record.id = workspace.free_character_id(record.id)
        workspace.save_character(record)
        created.append(record.id)
    _record_stage(workspace, settings, "forge", {
        "count": len(created),
        "characters": created,
        "failures": [],
    })
    _emit(args, "forged: " + ", ".join(created), {"characters": created})
    return 0


def _target_characters(args, workspace: Workspace) -> list[str]:
    if getattr(args, "character", None):
        return [args.character]
    return [r.id for r in workspace.list_characters()]


def cmd_scenes_gen(args) -> int:
    settings, workspace, catalog, provider = _context(args)
    counts = {}
    for character_id in _target_characters(args, workspace):
        record = workspace.load_character(character_id)
        scenes = scene.generate_scenes(record, provider, n=args.n, model=settings.model)
        workspace.save_scenes(character_id, scenes)
        counts[character_id] = len(scenes)
    _record_stage(workspace, settings, "scenes", {
        "count": sum(counts.values()),
        "per_character": counts,
        "failures": [],
    })
    _emit(
        args,
        "scenes: " + ", ".join(f"{k}={v}" for k, v in counts.items()),
        {"scenes": counts},
    )
    return 0


def _assign_steering(settings: Settings, catalog: AspectCatalog,
                     character_id: str, scene_index: int) -> tuple[str, str]:
    rng = random.Random(f"{settings.seed}:{character_id}:{scene_index}:assign")
    return rng.choice(catalog.emotions), rng.choice(catalog.topics)


def _pick_partner(settings: Settings, character_id: str,
                  scene_index: int, others: list[str]) -> str:
    rng = random.Random(f"{settings.seed}:{character_id}:{scene_index}:partner")
    return rng.choice(others)


def _generate_for_character(
    character_id: str,
    args,
    settings: Settings,
    workspace: Workspace,
    catalog: AspectCatalog,
    provider: Provider,
) -> tuple[int, list[str]]:
    record = workspace.load_character(character_id)
    scenes = workspace.load_scenes(character_id)
    all_ids = [r.id for r in workspace.list_characters()]
    others = sorted(x for x in all_ids if x != character_id)
    if getattr(args, "partner", None):
        others = [args.partner]
    if not others:
        raise SimsForgeError(
            "dialogue generation needs a partner: forge at least two characters"
        )

    def one(sc) -> tuple[int, str | None]:
        emotion, topic = _assign_steering(settings, catalog, character_id, sc.index)
        if getattr(args, "emotion", None):
            emotion = args.emotion
        if getattr(args, "topic", None):
            topic = args.topic
        partner_id = _pick_partner(settings, character_id, sc.index, others)
        partner = workspace.load_character(partner_id)
        try:
            script, raw = dialogue.generate_dialogue(
                record, partner, sc, emotion, topic, provider, catalog,
                model=settings.model,
            )
        except SimsForgeError as e:
            return sc.index, f"{character_id}/{sc.index}: {e}"
        workspace.save_script(script, raw)
        return sc.index, None

    failures: list[str] = []
    done = 0
    with ThreadPoolExecutor(max_workers=settings.max_parallel) as pool:
        for _, failure in sorted(pool.map(one, scenes)):
            if failure:
                failures.append(failure)
            else:
                done += 1
    return done, failures


def cmd_dialogue_gen(args) -> int:
    settings, workspace, catalog, provider = _context(args)
    total = 0
    failures: list[str] = []
    for character_id in _target_characters(args, workspace):
        n, bad = _generate_for_character(
            character_id, args, settings, workspace, catalog, provider
        )
        total += n
        failures.extend(bad)
    _record_stage(workspace, settings, "dialogue", {
        "count": total,
        "failures": failures,
    })
    _emit(
        args,
        f"dialogue scripts written: {total}"
        + (f", failed: {len(failures)}" if failures else ""),
        {"written": total, "failures": failures},
    )
    if failures:
        for f in failures:
            print(f"error: {f}", file=sys.stderr)
        return 2
    return 0


def cmd_dialogue_regen(args) -> int:
    settings, workspace, catalog, provider = _context(args)
    ledger = workspace.load_qc_ledger()
    if ledger is None or not ledger.failed_refs:
        _emit(args, "nothing queued for regeneration", {"regenerated": []})
        return 0
    regenerated = []
    for ref in list(ledger.failed_refs):
        old = workspace.load_script_by_ref(ref)
        record = workspace.load_character(old.character_id)
        partner = workspace.load_character(old.partner_id)
        scenes = workspace.load_scenes(old.character_id)
        sc = next(s for s in scenes if s.index == old.scene_index)
        # same scene, same steering labels as the rejected script
        script, raw = dialogue.generate_dialogue(
            record, partner, sc, old.emotion, old.topic, provider, catalog,
            model=settings.model,
        )
        workspace.save_script(script, raw)
        regenerated.append(ref)
    ledger.failed_refs = [r for r in ledger.failed_refs if r not in regenerated]
    workspace.save_qc_ledger(ledger)
    # fresh scripts go back into the review queue
    queue = workspace.load_qc_sample()
    queue.extend(r for r in regenerated if r not in queue)
    workspace.save_qc_sample(queue)
    _record_stage(workspace, settings, "dialogue-regen", {
        "count": len(regenerated),
        "failures": [],
    })
    _emit(args, f"regenerated: {len(regenerated)}", {"regenerated": regenerated})
    return 0


def cmd_qc_sample(args) -> int:
    settings, workspace, _, _ = _context(args)
    scripts = workspace.load_all_scripts()
    sampled = dialogue.qc_sample(scripts, rho=args.rho, seed=settings.seed)
    refs = [s.ref for s in sampled]
    workspace.save_qc_sample(refs)
    _record_stage(workspace, settings, "qc-sample", {
        "count": len(refs),
        "rho": args.rho,
        "failures": [],
    })
    _emit(args, f"sampled {len(refs)} of {len(scripts)} scripts for review",
          {"sampled_refs": refs})
    return 0


def cmd_qc_apply(args) -> int:
    settings, workspace, _, _ = _context(args)
    rows = []
    for line in Path(args.verdicts).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(dialogue.ReviewVerdict.from_dict(json.loads(line)))
    ledger = dialogue.apply_reviews(
        workspace.load_all_scripts(), rows,
        sampled_refs=workspace.load_qc_sample(),
    )
    workspace.save_qc_ledger(ledger)
    _record_stage(workspace, settings, "qc-apply", {
        "count": ledger.reviewed,
        "alignment_rate": ledger.alignment_rate,
        "failures": list(ledger.failed_refs),
    })
    rate = "n/a" if ledger.alignment_rate is None else f"{ledger.alignment_rate:.2%}"
    _emit(args, f"reviewed {ledger.reviewed}, alignment {rate}, "
                f"queued for regeneration: {len(ledger.failed_refs)}",
          ledger.to_dict())
    return 0


def cmd_interview_gen(args) -> int:
    settings, workspace, _, provider = _context(args)
    counts = {}
    for character_id in _target_characters(args, workspace):
        record = workspace.load_character(character_id)
        questions = interview.generate_questions(
            record, provider, n=args.n, model=settings.model
        )
        workspace.save_questions(character_id, questions)
        counts[character_id] = len(questions)
    _record_stage(workspace, settings, "interview", {
        "count": sum(counts.values()),
        "per_character": counts,
        "failures": [],
    })
    _emit(args, "questions: " + ", ".join(f"{k}={v}" for k, v in counts.items()),
          {"questions": counts})
    return 0


def cmd_eval_run(args) -> int:
    settings, workspace, _, provider = _context(args)
    by_label: dict[str, list[interview.DimensionScore]] = {}
    for line in Path(args.responses).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        record = workspace.load_character(row["character_id"])
        question = row.get("question")
        if question is None:
            stored = workspace.load_questions(row["character_id"])
            question = next(
                q.text for q in stored if q.index == int(row["question_index"])
            )
        label = row.get("model_label", "agent")
        for dim in interview.DIMENSIONS:
            try:
                score = interview.judge_response(
                    dim, record, question, row["response"], provider,
                    model=settings.model,
                )
            except SimsForgeError as e:
                raise ProviderError(f"judge reply unusable: {e}") from None
            by_label.setdefault(label, []).append(
                interview.DimensionScore(dimension=dim, score=score)
            )
    reports = [
        interview.aggregate(scores, model_label=label)
        for label, scores in sorted(by_label.items())
    ]
    payload = [r.to_dict() | {"rounded": r.rounded()} for r in reports]
    out_path = workspace.out / "eval_report.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _record_stage(workspace, settings, "eval", {
        "count": sum(r.n_scores for r in reports),
        "failures": [],
        "artifacts": {"out/eval_report.json": _file_hash(out_path)},
    })
    _emit(args, interview.render_report_table(reports), payload)
    return 0


def cmd_eval_wiki(args) -> int:
    settings, workspace, _, provider = _context(args)
    records = []
    for line in Path(args.records).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(interview.BenchmarkRecord.from_dict(json.loads(line)))
    report = interview.score_benchmark(records, provider, model=settings.model)
    out_path = workspace.out / "benchmark_report.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    _record_stage(workspace, settings, "eval-benchmark", {
        "count": report.n_records,
        "failures": [],
        "artifacts": {"out/benchmark_report.json": _file_hash(out_path)},
    })
    rejection = "n/a" if report.rejection is None else f"{report.rejection:.2f}"
    _emit(args,
          f"consistency {report.consistency:.2f}, knowledge {report.knowledge:.2f}, "
          f"rejection {rejection} over {report.n_records} records",
          report.to_dict())
    return 0


def cmd_eval_kappa(args) -> int:
    _, workspace, _, _ = _context(args)
    with open(args.ratings, newline="", encoding="utf-8") as fh:
        rows = [
            {
                "item": row["item"],
                "rater": row["rater"],
                "dimension": row["dimension"],
                "score": row["score"].strip(),
            }
            for row in csv.DictReader(fh)
        ]
    result = interview.kappa_from_ratings(rows)
    lines = [f"{dim}: {value:.3f}" for dim, value in result["per_dimension"].items()]
    lines.append(f"overall: {result['overall']:.3f}")
    _emit(args, "\n".join(lines), result)
    return 0


def _export_items(workspace: Workspace):
    ledger = workspace.load_qc_ledger()
    excluded = set(ledger.failed_refs) if ledger else set()
    items = []
    for script in workspace.load_all_scripts():
        if script.ref in excluded:
            continue
        record = workspace.load_character(script.character_id)
        scenes = workspace.load_scenes(script.character_id)
        sc = next(s for s in scenes if s.index == script.scene_index)
        items.append((record, script, sc))
    return items


def cmd_export_dataset(args) -> int:
    settings, workspace, _, _ = _context(args)
    items = _export_items(workspace)
    out_path = Path(args.out) if args.out else workspace.out / "corpus.jsonl"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8", newline="") as fh:
        written = dataset.export_training(
            items, fh,
            budget=args.budget,
            strip_thoughts=args.strip_thoughts,
        )
    config_path = workspace.out / "finetune_config.json"
    config_path.parent.mkdir(parents=True, exist_ok=True)
    config_path.write_text(
        json.dumps(dataset.export_finetune_config(), indent=2) + "\n",
        encoding="utf-8",
    )
    _record_stage(workspace, settings, "export", {
        "count": written,
        "budget": args.budget,
        "strip_thoughts": bool(args.strip_thoughts),
        "failures": [],
        "artifacts": {
            f"out/{out_path.name}": _file_hash(out_path),
            "out/finetune_config.json": _file_hash(config_path),
        },
    })
    _emit(args, f"wrote {written} examples to {out_path}",
          {"written": written, "path": str(out_path)})
    return 0


def cmd_stats(args) -> int:
    settings, workspace, _, _ = _context(args)
    stats = dataset.compute_stats(workspace.load_all_scripts())
    out_path = workspace.out / "stats.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")
    human = (
        f"characters: {stats['characters']}\n"
        f"scenes: {stats['scenes']}\n"
        f"total turns: {stats['total_turns']}\n"
        f"avg turns per scene: {stats['avg_turns_per_scene']:.2f}\n"
        f"full scale: {stats['full_scale']}"
    )
    _emit(args, human, stats)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .agentd import create_app

    settings, workspace, catalog, provider = _context(args)
    host, _, port = args.addr.rpartition(":")
    ui_dir = args.ui
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    app = create_app(
        workspace, provider, catalog,
        ui_dir=ui_dir,
        token_budget=settings.token_budget,
    )
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# argument wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simsforge",
        description="Forge characters, generate dialogue corpora, evaluate and serve them.",
    )
    parser.add_argument("--config", help="path to simsforge.toml")
    parser.add_argument("--data-dir", help="workspace root (default: current directory)")
    parser.add_argument("--provider", choices=("mock", "openai"))
    parser.add_argument("--model", help="model name for live providers")
    parser.add_argument("--base-url", help="chat completion endpoint base URL")
    parser.add_argument("--seed", type=int, help="seed for all sampling")
    parser.add_argument("--fixtures-dir", help="fixture replies for the mock provider")
    parser.add_argument("--strict-fixtures", action="store_true",
                        help="mock provider fails instead of synthesizing")
    parser.add_argument("--catalog", help="path to a catalog file")
    parser.add_argument("--json", action="store_true", help="machine-readable output")

    sub = parser.add_subparsers(dest="noun", required=True)

    p_catalog = sub.add_parser("catalog", help="inspect the aspect catalog")
    catalog_sub = p_catalog.add_subparsers(dest="verb", required=True)
    p = catalog_sub.add_parser("validate", help="load and validate a catalog file")
    p.add_argument("--path", help="catalog to validate (default: configured/shipped)")
    p.add_argument("--strict", action="store_true", help="require the reference counts")
    p.set_defaults(func=cmd_catalog_validate)

    p_char = sub.add_parser("character", help="forge characters")
    char_sub = p_char.add_subparsers(dest="verb", required=True)
    p = char_sub.add_parser("forge", help="create characters from a spec or randomly")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--spec", help="JSON file with one spec or a list of specs")
    group.add_argument("--random", action="store_true", help="sample specs from the catalog")
    p.add_argument("--count", type=int, default=1, help="how many random characters")
    p.set_defaults(func=cmd_character_forge)

    p_scenes = sub.add_parser("scenes", help="generate grounding scenes")
    scenes_sub = p_scenes.add_subparsers(dest="verb", required=True)
    p = scenes_sub.add_parser("gen")
    p.add_argument("--character", help="a character id (default: all)")
    p.add_argument("--n", type=int, default=scene.DEFAULT_SCENE_COUNT)
    p.set_defaults(func=cmd_scenes_gen)

    p_dlg = sub.add_parser("dialogue", help="generate dialogue scripts")
    dlg_sub = p_dlg.add_subparsers(dest="verb", required=True)
    p = dlg_sub.add_parser("gen")
    p.add_argument("--character", help="a character id (default: all)")
    p.add_argument("--partner", help="force a partner character id")
    p.add_argument("--emotion", help="steer every script to this emotion")
    p.add_argument("--topic", help="steer every script to this topic")
    p.set_defaults(func=cmd_dialogue_gen)
    p = dlg_sub.add_parser("regen", help="redo scripts that failed review")
    p.set_defaults(func=cmd_dialogue_regen)

    p_qc = sub.add_parser("qc", help="human review workflow")
    qc_sub = p_qc.add_subparsers(dest="verb", required=True)
    p = qc_sub.add_parser("sample", help="draw a seeded review sample")
    p.add_argument("--rho", type=float, default=dialogue.DEFAULT_QC_RHO)
    p.set_defaults(func=cmd_qc_sample)
    p = qc_sub.add_parser("apply", help="fold reviewer verdicts into the ledger")
    p.add_argument("--verdicts", required=True, help="JSONL of review verdicts")
    p.set_defaults(func=cmd_qc_apply)

    p_interview = sub.add_parser("interview", help="interview question generation")
    interview_sub = p_interview.add_subparsers(dest="verb", required=True)
    p = interview_sub.add_parser("gen")
    p.add_argument("--character", help="a character id (default: all)")
    p.add_argument("--n", type=int, default=interview.DEFAULT_QUESTION_COUNT)
    p.set_defaults(func=cmd_interview_gen)

    p_eval = sub.add_parser("eval", help="evaluation workflows")
    eval_sub = p_eval.add_subparsers(dest="verb", required=True)
    p = eval_sub.add_parser("run", help="judge stored responses on five dimensions")
    p.add_argument("--responses", required=True, help="JSONL of agent responses")
    p.set_defaults(func=cmd_eval_run)
    p = eval_sub.add_parser("wiki", help="score the out-of-persona benchmark")
    p.add_argument("--records", required=True, help="JSONL of benchmark records")
    p.set_defaults(func=cmd_eval_wiki)
    p = eval_sub.add_parser("kappa", help="inter-rater agreement from a ratings CSV")
    p.add_argument("--ratings", required=True, help="CSV with item,rater,dimension,score")
    p.set_defaults(func=cmd_eval_kappa)

    p_export = sub.add_parser("export", help="dataset export")
    export_sub = p_export.add_subparsers(dest="verb", required=True)
    p = export_sub.add_parser("dataset", help="write the instruction-tuning JSONL")
    p.add_argument("--budget", type=int, default=dataset.DEFAULT_TOKEN_BUDGET)
    p.add_argument("--strip-thoughts", action="store_true",
                   help="drop thinking turns from the export")
    p.add_argument("--out", help="output path (default: out/corpus.jsonl)")
    p.set_defaults(func=cmd_export_dataset)

    p = sub.add_parser("stats", help="recompute corpus statistics")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="run the HTTP agent service")
    p.add_argument("--addr", default="127.0.0.1:8321", help="HOST:PORT to bind")
    p.add_argument("--ui", help="static UI directory to serve under /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProviderError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SimsForgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (json.JSONDecodeError, KeyError, StopIteration, ValueError) as e:
        print(f"error: bad input: {e!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
