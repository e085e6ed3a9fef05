"""Condense a search trajectory into facts + reasoning for one answer.

The compression model must reply in a rigid three-section layout
(Useful Facts, Reasoning, Final Verdict, in that order). Parsing is
strict: wrong order, missing or duplicated headers are format errors.
The verdict is kept as metadata but never shown to the scorer; the
scorer input carries only question, answer, facts, and reasoning.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from typing import Any, Sequence

from .agent import AnswerCandidate, Question, Trajectory, render_search_history
from .errors import FormatError, OverflowUnavoidable, ValidationError
from .gateway import ChatMessage, LlmBackend, TemplateSet, chat_complete

VERDICTS = ("correct", "incorrect", "intermediate")

_HEADERS = ("Useful Facts", "Reasoning", "Final Verdict")


@dataclass(frozen=True)
class CompressedTrajectory:
    useful_facts: tuple[str, ...]
    reasoning: str
    verdict: str
    answer_id: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        if not self.reasoning.strip():
            raise ValidationError("reasoning must be non-empty")
        if any(not f.strip() for f in self.useful_facts):
            raise ValidationError("useful_facts entries must be non-empty")


def parse_verdict(text: str) -> str:
    value = text.strip().strip(".").lower()
    if value not in VERDICTS:
        raise FormatError(f"unrecognized verdict {text.strip()!r}", text)
    return value


def _header_pattern(name: str) -> re.Pattern[str]:
    return re.compile(r"\*\*" + re.escape(name) + r":?\*\*:?")


def parse_compression_output(reply: str) -> CompressedTrajectory:
    """Extract the three sections; strict about presence, order, uniqueness."""
    spans = []
    for name in _HEADERS:
        matches = list(_header_pattern(name).finditer(reply))
        if not matches:
            raise FormatError(f"missing section header {name!r}", reply)
        if len(matches) > 1:
            raise FormatError(f"duplicated section header {name!r}", reply)
        spans.append((name, matches[0].start(), matches[0].end()))
    for (_, prev_start, _), (name, start, _) in zip(spans, spans[1:]):
        if start <= prev_start:
            raise FormatError(f"section header {name!r} out of order", reply)

    facts_text = reply[spans[0][2] : spans[1][1]]
    reasoning = reply[spans[1][2] : spans[2][1]].strip()
    verdict_text = reply[spans[2][2] :].strip()

    facts = tuple(f.strip() for f in facts_text.split(";") if f.strip())
    if not reasoning:
        raise FormatError("empty Reasoning section", reply)
    if not verdict_text:
        raise FormatError("empty Final Verdict section", reply)
    return CompressedTrajectory(
        useful_facts=facts,
        reasoning=reasoning,
        verdict=parse_verdict(verdict_text),
    )


def serialize_compression(ct: CompressedTrajectory) -> str:
    """Canonical layout accepted back by parse_compression_output."""
    facts = " ".join(f"{fact};" for fact in ct.useful_facts)
    return (
        f"**Useful Facts:** {facts}\n\n"
        f"**Reasoning:** {ct.reasoning}\n\n"
        f"**Final Verdict:** {ct.verdict.capitalize()}"
    )


_FORMAT_REMINDER = (
    "Your previous reply did not follow the required format. Respond again "
    "using exactly these three sections in order: **Useful Facts:** (facts "
    "separated by semicolons), **Reasoning:**, **Final Verdict:** (Correct, "
    "Incorrect, or Intermediate). Do not add any other text."
)


def compress(
    trajectory: Trajectory,
    question: Question,
    answer: AnswerCandidate,
    backend: LlmBackend,
    templates: TemplateSet | None = None,
) -> CompressedTrajectory:
    """One compression call per answer, with a single format-reminder retry."""
    if trajectory.question_id != question.id:
        raise ValidationError(
            f"trajectory belongs to question {trajectory.question_id!r}, not {question.id!r}"
        )
    templates = templates or TemplateSet.default()
    prompt = templates.render(
        "context_compression",
        search_history=render_search_history(trajectory),
        question=question.text,
        answer=answer.text,
    )
    conversation = [ChatMessage("user", prompt)]
    reply = chat_complete(backend, conversation)
    try:
        ct = parse_compression_output(reply.content)
    except FormatError:
        conversation.append(reply)
        conversation.append(ChatMessage("user", _FORMAT_REMINDER))
        retry = chat_complete(backend, conversation)
        ct = parse_compression_output(retry.content)
    return replace(ct, answer_id=answer.id)


def render_scorer_input_parts(
    question_text: str,
    answer_text: str,
    facts: Sequence[str],
    reasoning: str,
    max_len: int = 1024,
) -> str:
    """Scorer input layout, whitespace-token-truncated from the tail.

    The question and answer lines are never truncated; facts and
    reasoning absorb all cuts. Evidence may be empty (zero-context
    scoring); the layout stays fixed either way.
    """
    head = f"Question: {question_text}\nAnswer: {answer_text}\n"
    tail = f"Facts: {'; '.join(facts)}\nReasoning: {reasoning}"
    head_tokens = len(head.split())
    if head_tokens > max_len:
        raise OverflowUnavoidable(
            f"question+answer need {head_tokens} tokens, budget is {max_len}"
        )
    budget = max_len - head_tokens
    tail_tokens = tail.split()
    if len(tail_tokens) > budget:
        tail = " ".join(tail_tokens[:budget])
    return head + tail


def render_scorer_input(
    question: Question,
    answer: AnswerCandidate,
    ct: CompressedTrajectory,
    max_len: int = 1024,
) -> str:
    """Parts renderer over a parsed compression; the verdict is excluded."""
    return render_scorer_input_parts(
        question.text, answer.text, ct.useful_facts, ct.reasoning, max_len
    )


def compression_to_json(ct: CompressedTrajectory) -> dict[str, Any]:
    return {
        "answer_id": ct.answer_id,
        "useful_facts": list(ct.useful_facts),
        "reasoning": ct.reasoning,
        "verdict": ct.verdict,
    }


def compression_from_json(obj: dict[str, Any]) -> CompressedTrajectory:
    return CompressedTrajectory(
        useful_facts=tuple(obj["useful_facts"]),
        reasoning=obj["reasoning"],
        verdict=obj["verdict"],
        answer_id=obj.get("answer_id", ""),
    )


def dump_compression(ct: CompressedTrajectory) -> str:
    return json.dumps(compression_to_json(ct), ensure_ascii=False)


def load_compression(line: str) -> CompressedTrajectory:
    return compression_from_json(json.loads(line))


def facts_block(facts: Sequence[str]) -> str:
    return "; ".join(facts)
