"""Scoring entry points used by evaluation and the CLI."""

from __future__ import annotations

from typing import Sequence

from ..agent import AnswerCandidate, Question
from ..compress import CompressedTrajectory, render_scorer_input
from ..errors import ValidationError
from .features import Featurizer, extract_features
from .head import RankedAnswer, ScorerHead, predict_score, rank_scored


def score_candidate(
    head: ScorerHead,
    fz: Featurizer,
    question: Question,
    answer: AnswerCandidate,
    ct: CompressedTrajectory,
    max_len: int = 1024,
) -> float:
    text = render_scorer_input(question, answer, ct, max_len)
    return predict_score(head, extract_features(text, fz))


def rank_answers(
    head: ScorerHead,
    fz: Featurizer,
    question: Question,
    candidates: Sequence[tuple[AnswerCandidate, CompressedTrajectory]],
    max_len: int = 1024,
) -> list[RankedAnswer]:
    """Score every candidate and order descending (ties by ascending id)."""
    if not candidates:
        raise ValidationError("rank_answers requires at least one candidate")
    scored = [
        (answer.id, score_candidate(head, fz, question, answer, ct, max_len))
        for answer, ct in candidates
    ]
    return rank_scored(scored)
