"""Preference-pair builder and ranking-benchmark builder.

Pair pipeline: generate diverse answers, judge each against the
reference, sample one (more factual, less factual) pair per question,
verify the order with a direct pairwise judge call, then attach
compressed evidence to both sides. Benchmark pipeline: keep verifiable
questions, pick one answer per judged class, assign gold ranks by class
order, and round-trip a human review file.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .agent import (
    AgentConfig,
    AnswerCandidate,
    Question,
    run_agentic_search,
)
from .compress import CompressedTrajectory, compress, parse_verdict
from .errors import (
    FormatError,
    NoValidPair,
    ReviewSchemaError,
    RuntimeFailure,
    SkippedQuestion,
    ValidationError,
)
from .gateway import ChatMessage, ChatParams, LlmBackend, TemplateSet, chat_complete
from .retrieval import LocalCorpus, WebClient
from .textnorm import normalize_answer

# Judge label order for pair sampling: higher is more factual.
LABEL_ORDER = {"correct": 3, "intermediate": 2, "incorrect": 1}

REVIEW_STATUSES = ("pending", "accepted", "rejected")

REVIEW_DECISIONS = ("accept", "reject")


def label_rank(label: str) -> int:
    if label not in LABEL_ORDER:
        raise ValidationError(f"unknown judge label {label!r}")
    return LABEL_ORDER[label]


@dataclass(frozen=True)
class PairSide:
    text: str
    label: str
    ct: CompressedTrajectory | None = None


@dataclass(frozen=True)
class PairRecord:
    question_id: str
    question: str
    chosen: PairSide
    rejected: PairSide
    verified: bool = False
    drop_reason: str | None = None

    def __post_init__(self):
        if label_rank(self.chosen.label) <= label_rank(self.rejected.label):
            raise ValidationError(
                f"chosen label {self.chosen.label!r} must outrank "
                f"rejected label {self.rejected.label!r}"
            )

    @property
    def attached(self) -> bool:
        return self.chosen.ct is not None and self.rejected.ct is not None

    @property
    def exportable(self) -> bool:
        return self.verified and self.attached and self.drop_reason is None


@dataclass(frozen=True)
class BenchItem:
    id: str
    source_dataset: str
    question: str
    reference: str
    answers: tuple[AnswerCandidate, ...]
    review_status: str = "pending"

    def __post_init__(self):
        if self.review_status not in REVIEW_STATUSES:
            raise ValidationError(f"unknown review_status {self.review_status!r}")
        ranks = sorted(a.gold_rank for a in self.answers)
        if len(self.answers) != 3 or ranks != [1, 2, 3]:
            raise ValidationError("bench item needs exactly 3 answers with gold ranks {1,2,3}")


# --- step 1: candidate generation ---

def generate_answers(
    question: Question,
    backend: LlmBackend,
    n: int = 16,
    temperature: float = 1.0,
    templates: TemplateSet | None = None,
) -> list[AnswerCandidate]:
    """Sample n answers and deduplicate on normalized text (may return < n)."""
    if n < 2:
        raise ValidationError("generate_answers requires n >= 2")
    templates = templates or TemplateSet.default()
    prompt = templates.render("answer_generate", question=question.text)
    params = ChatParams(temperature=temperature)
    seen: set[str] = set()
    out: list[AnswerCandidate] = []
    for i in range(n):
        reply = chat_complete(backend, [ChatMessage("user", prompt)], params)
        key = normalize_answer(reply.content)
        if key in seen or not key:
            continue
        seen.add(key)
        out.append(AnswerCandidate(id=f"{question.id}.g{len(out) + 1}", text=reply.content.strip()))
    return out


# --- step 2: per-answer judging ---

_LABEL_REMINDER = (
    "Your previous reply was not a valid verdict. Reply with exactly one "
    "word: Correct, Incorrect, or Intermediate."
)


def assess_answer(
    question: Question,
    answer: AnswerCandidate,
    reference: str,
    judge: LlmBackend,
    templates: TemplateSet | None = None,
) -> str:
    """Judge one answer against the reference; one format retry."""
    if not reference.strip():
        raise ValidationError("assess_answer requires a reference answer")
    templates = templates or TemplateSet.default()
    prompt = templates.render(
        "judge_label", question=question.text, reference=reference, answer=answer.text
    )
    conversation = [ChatMessage("user", prompt)]
    reply = chat_complete(judge, conversation)
    try:
        return parse_verdict(reply.content)
    except FormatError:
        conversation.append(reply)
        conversation.append(ChatMessage("user", _LABEL_REMINDER))
        retry = chat_complete(judge, conversation)
        return parse_verdict(retry.content)


# --- step 3: pair sampling ---

def valid_pairs(
    labeled: Sequence[tuple[AnswerCandidate, str]]
) -> list[tuple[tuple[AnswerCandidate, str], tuple[AnswerCandidate, str]]]:
    out = []
    for chosen in labeled:
        for rejected in labeled:
            if label_rank(chosen[1]) > label_rank(rejected[1]):
                out.append((chosen, rejected))
    return out


def sample_pairs(
    question: Question,
    labeled: Sequence[tuple[AnswerCandidate, str]],
    seed: int,
) -> list[PairRecord]:
    """Pick one uniformly random (chosen, rejected) pair with a strict label gap."""
    pairs = valid_pairs(labeled)
    if not pairs:
        raise NoValidPair(f"question {question.id!r}: all answers share one label")
    rng = random.Random(seed)
    (chosen, chosen_label), (rejected, rejected_label) = rng.choice(pairs)
    return [
        PairRecord(
            question_id=question.id,
            question=question.text,
            chosen=PairSide(text=chosen.text, label=chosen_label),
            rejected=PairSide(text=rejected.text, label=rejected_label),
        )
    ]


# --- step 4: pairwise verification ---

_PAIRWISE_REMINDER = (
    "Your previous reply was not a valid choice. Reply with exactly one "
    "token: Answer1 or Answer2."
)


def _parse_pairwise(reply: str) -> str:
    token = reply.strip().strip(".")
    if token not in ("Answer1", "Answer2"):
        raise FormatError(f"unrecognized pairwise choice {reply.strip()!r}", reply)
    return token


def verify_preference(
    pair: PairRecord,
    judge: LlmBackend,
    templates: TemplateSet | None = None,
) -> PairRecord:
    """Ask the judge to compare both answers directly; set the verified flag."""
    templates = templates or TemplateSet.default()
    prompt = templates.render(
        "judge_pairwise",
        question=pair.question,
        answer_1=pair.chosen.text,
        answer_2=pair.rejected.text,
    )
    conversation = [ChatMessage("user", prompt)]
    reply = chat_complete(judge, conversation)
    try:
        choice = _parse_pairwise(reply.content)
    except FormatError:
        conversation.append(reply)
        conversation.append(ChatMessage("user", _PAIRWISE_REMINDER))
        retry = chat_complete(judge, conversation)
        choice = _parse_pairwise(retry.content)
    return replace(pair, verified=(choice == "Answer1"))


# --- step 5: evidence attachment ---

def attach_trajectories(
    pair: PairRecord,
    search_backend: LlmBackend,
    compress_backend: LlmBackend,
    corpus: LocalCorpus | None,
    cfg: AgentConfig,
    templates: TemplateSet | None = None,
    web_client: WebClient | None = None,
) -> PairRecord:
    """One shared search for the pair, then per-side compression.

    Compression format failures drop the pair with a recorded reason
    instead of aborting the batch.
    """
    if not pair.verified:
        raise ValidationError("attach_trajectories requires a verified pair")
    question = Question(id=pair.question_id, text=pair.question)
    chosen = AnswerCandidate(id="chosen", text=pair.chosen.text)
    rejected = AnswerCandidate(id="rejected", text=pair.rejected.text)
    traj = run_agentic_search(
        question, [chosen, rejected], search_backend, corpus, cfg, templates, web_client
    )
    if traj.termination == "backend_error":
        return replace(pair, drop_reason=f"search backend error: {traj.error}")
    try:
        chosen_ct = compress(traj, question, chosen, compress_backend, templates)
        rejected_ct = compress(traj, question, rejected, compress_backend, templates)
    except FormatError as exc:
        return replace(pair, drop_reason=f"compression format error: {exc}")
    return replace(
        pair,
        chosen=replace(pair.chosen, ct=chosen_ct),
        rejected=replace(pair.rejected, ct=rejected_ct),
    )


# --- benchmark builder ---

def is_verifiable(
    question: Question, judge: LlmBackend, templates: TemplateSet | None = None
) -> bool:
    """Judge-gated filter: does the question have one unambiguous answer?"""
    templates = templates or TemplateSet.default()
    prompt = templates.render("judge_verifiable", question=question.text)
    reply = chat_complete(judge, [ChatMessage("user", prompt)])
    token = reply.content.strip().strip(".").lower()
    if token not in ("yes", "no"):
        raise FormatError(f"unrecognized verifiable reply {reply.content.strip()!r}", reply.content)
    return token == "yes"


def build_bench_item(
    question: Question,
    labeled: Sequence[tuple[AnswerCandidate, str]],
    rng: random.Random,
    source_dataset: str = "",
) -> BenchItem:
    """One answer per label class, gold ranks by class order (correct first)."""
    by_label: dict[str, list[AnswerCandidate]] = {}
    for answer, label in labeled:
        by_label.setdefault(label, []).append(answer)
    missing = [lab for lab in ("correct", "intermediate", "incorrect") if lab not in by_label]
    if missing:
        raise SkippedQuestion(question.id, f"no {missing[0]} answer in pool")
    picks = {lab: rng.choice(by_label[lab]) for lab in ("correct", "intermediate", "incorrect")}
    order = [picks["correct"], picks["intermediate"], picks["incorrect"]]
    # presentation order is shuffled so gold rank 1 is not always Answer1
    rng.shuffle(order)
    answers = []
    for position, answer in enumerate(order, start=1):
        gold = 1 if answer is picks["correct"] else 2 if answer is picks["intermediate"] else 3
        answers.append(AnswerCandidate(id=f"Answer{position}", text=answer.text, gold_rank=gold))
    return BenchItem(
        id=question.id,
        source_dataset=source_dataset or (question.source_dataset or ""),
        question=question.text,
        reference=question.reference or "",
        answers=tuple(answers),
    )


def build_bench_items(
    questions: Sequence[Question],
    generator: LlmBackend | Sequence[LlmBackend],
    judge: LlmBackend | Sequence[LlmBackend],
    seed: int,
    n: int = 16,
    temperature: float = 1.0,
    templates: TemplateSet | None = None,
) -> tuple[list[BenchItem], list[SkippedQuestion]]:
    """Filter, generate, judge, and rank; returns (items, skipped).

    Backends may be given per-question (sequence) or shared (single);
    per-question mocks keep scripts isolated.
    """
    items: list[BenchItem] = []
    skipped: list[SkippedQuestion] = []
    rng = random.Random(seed)
    for i, question in enumerate(questions):
        gen_backend = generator[i] if isinstance(generator, (list, tuple)) else generator
        judge_backend = judge[i] if isinstance(judge, (list, tuple)) else judge
        try:
            if not question.reference:
                raise SkippedQuestion(question.id, "missing reference answer")
            if not is_verifiable(question, judge_backend, templates):
                raise SkippedQuestion(question.id, "question not verifiable")
            answers = generate_answers(question, gen_backend, n, temperature, templates)
            labeled = [
                (a, assess_answer(question, a, question.reference, judge_backend, templates))
                for a in answers
            ]
            items.append(build_bench_item(question, labeled, rng))
        except SkippedQuestion as skip:
            skipped.append(skip)
        except (FormatError, RuntimeFailure) as exc:
            skipped.append(SkippedQuestion(question.id, f"pipeline failure: {exc}"))
    return items, skipped


# --- serialization ---

def _side_to_json(side: PairSide) -> dict[str, Any]:
    return {
        "text": side.text,
        "label": side.label,
        "facts": list(side.ct.useful_facts) if side.ct else [],
        "reasoning": side.ct.reasoning if side.ct else "",
    }


def pair_to_json(pair: PairRecord) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "question_id": pair.question_id,
        "question": pair.question,
        "chosen": _side_to_json(pair.chosen),
        "rejected": _side_to_json(pair.rejected),
        "verified": pair.verified,
    }
    if pair.drop_reason:
        obj["drop_reason"] = pair.drop_reason
    return obj


def _side_from_json(obj: dict[str, Any], answer_id: str) -> PairSide:
    facts = tuple(obj.get("facts", []))
    reasoning = obj.get("reasoning", "")
    ct = None
    if reasoning.strip():
        ct = CompressedTrajectory(
            useful_facts=facts,
            reasoning=reasoning,
            verdict="intermediate",
            answer_id=answer_id,
        )
    return PairSide(text=obj["text"], label=obj["label"], ct=ct)


def pair_from_json(obj: dict[str, Any]) -> PairRecord:
    return PairRecord(
        question_id=obj["question_id"],
        question=obj["question"],
        chosen=_side_from_json(obj["chosen"], "chosen"),
        rejected=_side_from_json(obj["rejected"], "rejected"),
        verified=bool(obj.get("verified", False)),
        drop_reason=obj.get("drop_reason"),
    )


def write_pairs(pairs: Iterable[PairRecord], path: str | Path, exportable_only: bool = True) -> int:
    """Write pairs.jsonl; by default only verified pairs with evidence."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            if exportable_only and not pair.exportable:
                continue
            fh.write(json.dumps(pair_to_json(pair), ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def read_pairs(path: str | Path) -> list[PairRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(pair_from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValidationError(f"bad pair record at line {lineno}: {exc}") from exc
    return out


def bench_item_to_json(item: BenchItem) -> dict[str, Any]:
    return {
        "id": item.id,
        "source": item.source_dataset,
        "question": item.question,
        "reference": item.reference,
        "answers": [{"text": a.text, "gold_rank": a.gold_rank} for a in item.answers],
        "review_status": item.review_status,
    }


def bench_item_from_json(obj: dict[str, Any]) -> BenchItem:
    answers = tuple(
        AnswerCandidate(id=f"Answer{i}", text=a["text"], gold_rank=int(a["gold_rank"]))
        for i, a in enumerate(obj["answers"], start=1)
    )
    return BenchItem(
        id=str(obj["id"]),
        source_dataset=obj.get("source", ""),
        question=obj["question"],
        reference=obj.get("reference", ""),
        answers=answers,
        review_status=obj.get("review_status", "pending"),
    )


def write_bench(items: Iterable[BenchItem], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(bench_item_to_json(item), ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def read_bench(path: str | Path) -> list[BenchItem]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(bench_item_from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"bad bench record at line {lineno}: {exc}") from exc
    return out


# --- human review round-trip ---

def export_review(items: Sequence[BenchItem], path: str | Path) -> None:
    """Write an editable review file; reviewers fill the decisions list."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            by_rank = sorted(item.answers, key=lambda a: a.gold_rank)
            record = {
                "id": item.id,
                "question": item.question,
                "reference": item.reference,
                "ranked_answers": [f"{a.gold_rank}. {a.text}" for a in by_rank],
                "decisions": [],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _status_from_decisions(decisions: Sequence[str]) -> str:
    for d in decisions:
        if d not in REVIEW_DECISIONS:
            raise ReviewSchemaError(f"unknown review decision {d!r}")
    if not decisions:
        return "pending"
    rejects = sum(1 for d in decisions if d == "reject")
    if len(decisions) == 1:
        return "accepted" if decisions[0] == "accept" else "rejected"
    # multi-annotator policy: discarded only when at least two reject
    return "rejected" if rejects >= 2 else "accepted"


def import_review(items: Sequence[BenchItem], path: str | Path) -> list[BenchItem]:
    """Apply reviewer decisions; items absent from the file stay pending."""
    decisions_by_id: dict[str, list[str]] = {}
    known = {item.id for item in items}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                item_id = str(record["id"])
                decisions = list(record.get("decisions", []))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ReviewSchemaError(f"bad review record at line {lineno}: {exc}") from exc
            if item_id not in known:
                raise ReviewSchemaError(f"review line {lineno} names unknown item {item_id!r}")
            if item_id in decisions_by_id:
                raise ReviewSchemaError(f"duplicate review record for item {item_id!r}")
            decisions_by_id[item_id] = decisions
    return [
        replace(item, review_status=_status_from_decisions(decisions_by_id.get(item.id, [])))
        for item in items
    ]
