"""Command-line entry point.

Subcommands cover the whole pipeline: search, compress, train, score,
rank, build-pairs, build-bench, review, eval, select. Every subcommand
streams JSONL and writes a run manifest next to its output. Exit codes:
0 success, 1 validation/config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import pipelines
from .agent import AnswerCandidate, Question, dump_trajectory, load_trajectory, run_agentic_search
from .compress import compress, render_scorer_input_parts
from .config import RunConfig, load_config
from .errors import DivaError, RuntimeFailure, ValidationError
from .evalbench import (
    MODES,
    VerifierStack,
    best_of_n_select,
    evaluate_dataset,
    render_table,
    save_report,
)
from .gateway import TemplateSet
from .retrieval import LocalCorpus, load_corpus_jsonl
from .runner import run_bounded
from .scorer import (
    RemoteScorer,
    load_head,
    predict_score,
    extract_features,
    rank_scored,
    save_head,
    train_scorer,
)


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main controls exit codes."""

    def error(self, message: str):
        raise ValidationError(message)


def _read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    return out


def _write_jsonl(path: str | Path, records: Iterable[dict[str, Any]]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def _write_manifest(
    out_path: str | Path, command: str, cfg: RunConfig, counts: dict[str, Any], started: float
) -> None:
    manifest = {
        "command": command,
        "config": cfg.config_echo(),
        "seed": cfg.seed,
        "counts": counts,
        "duration_s": round(time.monotonic() - started, 3),
    }
    path = Path(str(out_path) + ".manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_items(path: str | Path) -> list[tuple[Question, list[AnswerCandidate]]]:
    """Accept bench.jsonl records or plain {"id","question","answers"} items."""
    items = []
    for obj in _read_jsonl(path):
        question = Question(
            id=str(obj["id"]),
            text=obj["question"],
            reference=obj.get("reference") or None,
            source_dataset=obj.get("source") or None,
        )
        answers = []
        for i, entry in enumerate(obj.get("answers", []), start=1):
            if isinstance(entry, str):
                text, gold = entry, None
            else:
                text, gold = entry["text"], entry.get("gold_rank")
            answers.append(AnswerCandidate(id=f"Answer{i}", text=text, gold_rank=gold))
        items.append((question, answers))
    return items


def _load_questions(path: str | Path) -> list[Question]:
    return [
        Question(
            id=str(obj["id"]),
            text=obj["question"],
            reference=obj.get("reference") or None,
            source_dataset=obj.get("source") or None,
        )
        for obj in _read_jsonl(path)
    ]


def _templates(cfg: RunConfig) -> TemplateSet:
    if cfg.template_dir:
        return TemplateSet(cfg.resolve(cfg.template_dir))
    return TemplateSet.default()


def _corpus(cfg: RunConfig) -> LocalCorpus | None:
    if not cfg.corpus_path or "local" not in cfg.retrieval.enabled_sources:
        return None
    return load_corpus_jsonl(cfg.resolve(cfg.corpus_path))


def _stack_factory(cfg: RunConfig, mode: str, head_path: str | None):
    """Per-item verifier stack; mock backends get fresh scripts each item."""
    templates = _templates(cfg)
    corpus = _corpus(cfg)
    web_client = cfg.web_client()
    head = None
    featurizer = None
    remote = None
    if mode in ("diva", "discriminative_naive"):
        if cfg.scorer_endpoint:
            remote = RemoteScorer(endpoint=cfg.scorer_endpoint, timeout=cfg.timeout)
        elif head_path:
            head = load_head(head_path)
            featurizer = cfg.featurizer()
        else:
            raise ValidationError(f"mode {mode!r} needs --head or backends.scorer_endpoint")

    needs_search = mode in ("diva", "agentic_generative_verifier", "agentic_generative_scorer")
    needs_verify = mode in (
        "generative_naive",
        "agentic_generative_verifier",
        "agentic_generative_scorer",
    )

    def factory(_item) -> VerifierStack:
        return VerifierStack(
            search_backend=cfg.make_backend("search") if needs_search else None,
            compress_backend=cfg.make_backend("compress") if mode == "diva" else None,
            verify_backend=cfg.make_backend("verify") if needs_verify else None,
            head=head,
            featurizer=featurizer,
            remote_scorer=remote,
            corpus=corpus,
            web_client=web_client,
            agent_cfg=cfg.agent,
            templates=templates,
            max_len=cfg.train.max_len,
        )

    return factory


# --- subcommands ---

def _cmd_search(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    items = _load_items(args.input)
    templates = _templates(cfg)
    corpus = _corpus(cfg)
    web_client = cfg.web_client()

    def work(entry):
        question, answers = entry
        backend = cfg.make_backend("search")
        if backend is None:
            raise ValidationError("backends.search is 'none'; search needs a backend")
        return run_agentic_search(
            question, answers, backend, corpus, cfg.agent, templates, web_client
        )
    trajectories = run_bounded(work, items, max_workers=cfg.parallelism)

    with open(args.out, "w", encoding="utf-8") as fh:
        for traj in trajectories:
            fh.write(dump_trajectory(traj) + "\n")
    counts = {"items": len(items)}
    for traj in trajectories:
        counts[traj.termination] = counts.get(traj.termination, 0) + 1
    _write_manifest(args.out, "search", cfg, counts, started)
    return 0


def _cmd_compress(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    items = _load_items(args.items)
    with open(args.traj, encoding="utf-8") as fh:
        trajectories = {
            t.question_id: t for t in (load_trajectory(line) for line in fh if line.strip())
        }
    templates = _templates(cfg)

    def work(entry):
        question, answers = entry
        if question.id not in trajectories:
            raise ValidationError(f"no trajectory for question {question.id!r}")
        traj = trajectories[question.id]
        backend = cfg.make_backend("compress")
        if backend is None:
            raise ValidationError("backends.compress is 'none'; compress needs a backend")
        rows = []
        for answer in answers:
            ct = compress(traj, question, answer, backend, templates)
            rows.append(
                {
                    "question_id": question.id,
                    "question": question.text,
                    "answer_id": answer.id,
                    "answer": answer.text,
                    "useful_facts": list(ct.useful_facts),
                    "reasoning": ct.reasoning,
                    "verdict": ct.verdict,
                }
            )
        return rows

    all_rows = run_bounded(work, items, max_workers=cfg.parallelism)
    n = _write_jsonl(args.out, (row for rows in all_rows for row in rows))
    _write_manifest(args.out, "compress", cfg, {"items": len(items), "contexts": n}, started)
    return 0


def _pairs_to_preferences(records: Sequence[pipelines.PairRecord]):
    from .scorer import PreferencePair

    prefs = []
    skipped = 0
    for record in records:
        if not record.exportable:
            skipped += 1
            continue
        question = Question(id=record.question_id, text=record.question)
        prefs.append(
            PreferencePair(
                question=question,
                chosen=(AnswerCandidate(id="chosen", text=record.chosen.text), record.chosen.ct),
                rejected=(
                    AnswerCandidate(id="rejected", text=record.rejected.text),
                    record.rejected.ct,
                ),
            )
        )
    return prefs, skipped


def _cmd_train(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    records = pipelines.read_pairs(args.pairs)
    prefs, skipped = _pairs_to_preferences(records)
    if not prefs:
        raise ValidationError("no exportable pairs in input (need verified pairs with evidence)")

    def log_epoch(epoch: int, loss: float) -> None:
        print(f"epoch {epoch}: mean_loss={loss:.6f}", file=sys.stderr)

    result = train_scorer(
        prefs,
        cfg.featurizer(),
        cfg.train,
        architecture=cfg.architecture,
        hidden=cfg.hidden,
        on_epoch=log_epoch,
    )
    save_head(result.head, args.out)
    counts = {
        "pairs": len(prefs),
        "skipped": skipped,
        "epoch_mean_losses": result.epoch_mean_losses,
    }
    _write_manifest(args.out, "train", cfg, counts, started)
    return 0


def _scorer_fn(cfg: RunConfig, head_path: str | None):
    if cfg.scorer_endpoint:
        remote = RemoteScorer(endpoint=cfg.scorer_endpoint, timeout=cfg.timeout)
        return lambda q, a, facts, reasoning: remote.score(q, a, facts, reasoning)
    if not head_path:
        raise ValidationError("need --head or backends.scorer_endpoint")
    head = load_head(head_path)
    fz = cfg.featurizer()

    def fn(q: str, a: str, facts: Sequence[str], reasoning: str) -> float:
        text = render_scorer_input_parts(q, a, facts, reasoning, cfg.train.max_len)
        return predict_score(head, extract_features(text, fz))

    return fn


def _cmd_score(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    rows = _read_jsonl(args.ctx)
    score = _scorer_fn(cfg, args.head)
    out_rows = [
        {
            "question_id": row["question_id"],
            "answer_id": row["answer_id"],
            "score": score(
                row["question"], row["answer"], row.get("useful_facts", []), row.get("reasoning", "")
            ),
        }
        for row in rows
    ]
    n = _write_jsonl(args.out, out_rows)
    _write_manifest(args.out, "score", cfg, {"scored": n}, started)
    return 0


def _cmd_rank(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    rows = _read_jsonl(args.ctx)
    score = _scorer_fn(cfg, args.head)
    by_question: dict[str, list[tuple[str, float]]] = {}
    order: list[str] = []
    for row in rows:
        qid = row["question_id"]
        if qid not in by_question:
            by_question[qid] = []
            order.append(qid)
        by_question[qid].append(
            (
                row["answer_id"],
                score(
                    row["question"],
                    row["answer"],
                    row.get("useful_facts", []),
                    row.get("reasoning", ""),
                ),
            )
        )
    out_rows = []
    for qid in order:
        ranking = rank_scored(by_question[qid])
        out_rows.append(
            {
                "question_id": qid,
                "ranking": [
                    {"answer_id": r.answer_id, "score": r.score, "tie": r.tie} for r in ranking
                ],
            }
        )
    n = _write_jsonl(args.out, out_rows)
    _write_manifest(args.out, "rank", cfg, {"questions": n, "answers": len(rows)}, started)
    return 0


def _cmd_build_pairs(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    questions = _load_questions(args.questions)
    templates = _templates(cfg)
    corpus = _corpus(cfg)
    web_client = cfg.web_client()
    counts = {"questions": len(questions), "no_valid_pair": 0, "unverified": 0, "dropped": 0}
    pairs: list[pipelines.PairRecord] = []

    for index, question in enumerate(questions):
        generator = cfg.make_backend("generator")
        judge = cfg.make_backend("judge")
        if generator is None or judge is None:
            raise ValidationError("build-pairs needs generator and judge backends")
        if not question.reference:
            raise ValidationError(f"question {question.id!r} has no reference answer")
        answers = pipelines.generate_answers(
            question, generator, n=args.n, templates=templates
        )
        labeled = [
            (a, pipelines.assess_answer(question, a, question.reference, judge, templates))
            for a in answers
        ]
        try:
            sampled = pipelines.sample_pairs(question, labeled, seed=cfg.seed + index)
        except DivaError:
            counts["no_valid_pair"] += 1
            continue
        for pair in sampled:
            pair = pipelines.verify_preference(pair, judge, templates)
            if not pair.verified:
                counts["unverified"] += 1
                continue
            pair = pipelines.attach_trajectories(
                pair,
                cfg.make_backend("search"),
                cfg.make_backend("compress"),
                corpus,
                cfg.agent,
                templates,
                web_client,
            )
            if pair.drop_reason:
                counts["dropped"] += 1
            pairs.append(pair)

    counts["exported"] = pipelines.write_pairs(pairs, args.out)
    _write_manifest(args.out, "build-pairs", cfg, counts, started)
    return 0


def _cmd_build_bench(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    questions = _load_questions(args.questions)
    templates = _templates(cfg)
    generators = [cfg.make_backend("generator") for _ in questions]
    judges = [cfg.make_backend("judge") for _ in questions]
    items, skipped = pipelines.build_bench_items(
        questions, generators, judges, seed=cfg.seed, n=args.n, templates=templates
    )
    pipelines.write_bench(items, args.out)
    counts = {
        "questions": len(questions),
        "items": len(items),
        "skipped": [{"id": s.question_id, "reason": s.reason} for s in skipped],
    }
    _write_manifest(args.out, "build-bench", cfg, counts, started)
    return 0


def _cmd_review(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    items = pipelines.read_bench(args.bench)
    if args.action == "export":
        pipelines.export_review(items, args.out)
        _write_manifest(args.out, "review-export", cfg, {"items": len(items)}, started)
        return 0
    updated = pipelines.import_review(items, args.review)
    pipelines.write_bench(updated, args.out)
    counts = {"items": len(updated)}
    for item in updated:
        counts[item.review_status] = counts.get(item.review_status, 0) + 1
    _write_manifest(args.out, "review-import", cfg, counts, started)
    return 0


def _cmd_eval(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    items = pipelines.read_bench(args.bench)
    factory = _stack_factory(cfg, args.mode, args.head)
    report = evaluate_dataset(
        items,
        args.mode,
        factory,
        config_echo=cfg.config_echo(),
        max_workers=cfg.parallelism,
    )
    save_report(report, args.report)
    print(render_table(report))
    counts = {
        "items": report.overall.n_items,
        "precision_at_1": report.overall.precision_at_1,
        "kendall_tau": report.overall.kendall_tau,
    }
    _write_manifest(args.report, "eval", cfg, counts, started)
    return 0


def _cmd_select(args, cfg: RunConfig) -> int:
    started = time.monotonic()
    rows = _read_jsonl(args.input)
    factory = _stack_factory(cfg, args.mode, args.head)
    out_rows = []
    f1_values = []
    for row in rows:
        question = Question(id=str(row["id"]), text=row["question"])
        candidates = [
            AnswerCandidate(id=f"Answer{i}", text=text)
            for i, text in enumerate(row["candidates"][: args.n], start=1)
        ]
        result = best_of_n_select(
            question, candidates, factory(None), mode=args.mode, gold=row.get("gold")
        )
        record: dict[str, Any] = {
            "id": question.id,
            "selected_id": result.selected_id,
            "selected_text": result.selected_text,
        }
        if result.token_f1 is not None:
            record["token_f1"] = result.token_f1
            f1_values.append(result.token_f1)
        out_rows.append(record)
    _write_jsonl(args.out, out_rows)
    counts: dict[str, Any] = {"questions": len(out_rows)}
    if f1_values:
        counts["mean_token_f1"] = sum(f1_values) / len(f1_values)
    _write_manifest(args.out, "select", cfg, counts, started)
    return 0


# --- parser wiring ---

def build_parser() -> _Parser:
    parser = _Parser(prog="diva", description="Agentic evidence search and factuality scoring")
    parser.add_argument("--config", default=None, help="INI config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run the evidence-search loop per question")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_search)

    p = sub.add_parser("compress", help="condense trajectories into per-answer evidence")
    p.add_argument("--traj", required=True)
    p.add_argument("--items", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_compress)

    p = sub.add_parser("train", help="fit the scoring head on preference pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("score", help="score compressed contexts")
    p.add_argument("--head", default=None)
    p.add_argument("--ctx", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("rank", help="rank answers per question by score")
    p.add_argument("--head", default=None)
    p.add_argument("--ctx", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_rank)

    p = sub.add_parser("build-pairs", help="build preference training pairs")
    p.add_argument("--questions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=16, help="answers sampled per question")
    p.set_defaults(fn=_cmd_build_pairs)

    p = sub.add_parser("build-bench", help="build a 3-answer ranking benchmark")
    p.add_argument("--questions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=16)
    p.set_defaults(fn=_cmd_build_bench)

    p = sub.add_parser("review", help="export or import the human review file")
    p.add_argument("action", choices=("export", "import"))
    p.add_argument("--bench", required=True)
    p.add_argument("--review", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_review)

    p = sub.add_parser("eval", help="evaluate a verifier mode on a benchmark")
    p.add_argument("--bench", required=True)
    p.add_argument("--mode", choices=MODES, default="diva")
    p.add_argument("--sources", choices=("both", "web", "local"), default=None)
    p.add_argument("--head", default=None)
    p.add_argument("--report", required=True)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("select", help="best-of-N answer selection")
    p.add_argument("--input", required=True)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--mode", choices=("diva", "discriminative_naive", "agentic_generative_scorer"), default="diva")
    p.add_argument("--head", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_select)

    return parser


def _collect_overrides(args) -> dict[str, str]:
    overrides = {}
    for item in args.overrides:
        if "=" not in item:
            raise ValidationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if getattr(args, "sources", None):
        overrides["retrieval.sources"] = (
            "web,local" if args.sources == "both" else args.sources
        )
    if getattr(args, "review", None) is None and getattr(args, "action", "") == "import":
        raise ValidationError("review import requires --review")
    return overrides


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        overrides = _collect_overrides(args)
        cfg = load_config(args.config, overrides)
        return args.fn(args, cfg)
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DivaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
