"""Preference-pair input: the pairs.jsonl schema and the scorer-input layout.

Both are external contracts shared with the companion scoring package:
pairs.jsonl rows look like

    {"question_id": ..., "question": ...,
     "chosen":   {"text": ..., "label": ..., "facts": [...], "reasoning": ...},
     "rejected": {"text": ..., "label": ..., "facts": [...], "reasoning": ...},
     "verified": true}

and the model input is rendered as

    Question: <question>\nAnswer: <answer>\nFacts: <f1>; <f2>\nReasoning: <text>

where the question/answer head is never truncated and the facts/reasoning
tail is whitespace-token-truncated to the remaining budget. The rendered
strings are pinned by the shared fixture file scorer_input_cases.json.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import DataError


def render_scorer_input(
    question: str,
    answer: str,
    facts: Sequence[str],
    reasoning: str,
    max_length: int = 1024,
) -> str:
    head = f"Question: {question}\nAnswer: {answer}\n"
    tail = f"Facts: {'; '.join(facts)}\nReasoning: {reasoning}"
    head_tokens = len(head.split())
    if head_tokens > max_length:
        raise DataError(f"question+answer need {head_tokens} tokens, budget is {max_length}")
    budget = max_length - head_tokens
    tail_tokens = tail.split()
    if len(tail_tokens) > budget:
        tail = " ".join(tail_tokens[:budget])
    return head + tail


@dataclass(frozen=True)
class PairExample:
    question_id: str
    chosen_text: str  # rendered scorer input for the preferred answer
    rejected_text: str  # rendered scorer input for the dispreferred answer


def _usable(row: dict) -> bool:
    """Trainable rows are verified, kept, and carry evidence on both sides."""
    if not row.get("verified") or row.get("drop_reason"):
        return False
    for side in ("chosen", "rejected"):
        entry = row.get(side) or {}
        if not isinstance(entry.get("reasoning"), str) or not entry["reasoning"].strip():
            return False
    return True


def _render_side(row: dict, side: str, max_length: int) -> str:
    entry = row[side]
    try:
        return render_scorer_input(
            row["question"],
            entry["text"],
            entry.get("facts", []),
            entry["reasoning"],
            max_length,
        )
    except DataError as exc:
        raise DataError(f"record {row.get('question_id', '?')!r} ({side}): {exc}") from exc


def read_pairs_jsonl(path: str | Path, max_length: int = 1024) -> list[PairExample]:
    """Load trainable pairs; unusable rows are skipped, broken files raise."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"pairs file not found: {path}")
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(row, dict) or "chosen" not in row or "rejected" not in row:
                raise DataError(f"{path}:{lineno}: not a preference-pair record")
            if not _usable(row):
                continue
            examples.append(
                PairExample(
                    question_id=str(row.get("question_id", f"line{lineno}")),
                    chosen_text=_render_side(row, "chosen", max_length),
                    rejected_text=_render_side(row, "rejected", max_length),
                )
            )
    return examples
