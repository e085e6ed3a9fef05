"""Ranking and answer-quality metrics.

Rankings are strict orders (ties are resolved and flagged upstream), so
Kendall's tau is the tau-a form over all item pairs. The top-1 metric is
conservative: a tie at the top counts as a miss.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from ..errors import MissingLabels, NotAPermutation
from ..textnorm import answer_tokens


@dataclass(frozen=True)
class RankingMetrics:
    precision_at_1: float
    kendall_tau: float
    n_items: int
    n_ties: int


def kendall_tau(predicted: Sequence[Hashable], gold: Sequence[Hashable]) -> float:
    """Tau-a between two strict orders over the same k >= 2 items."""
    k = len(predicted)
    if k < 2:
        raise NotAPermutation("rankings need at least 2 items")
    if len(set(predicted)) != k or set(predicted) != set(gold) or len(gold) != k:
        raise NotAPermutation("inputs must be permutations of the same item set")
    pred_pos = {item: i for i, item in enumerate(predicted)}
    gold_pos = {item: i for i, item in enumerate(gold)}
    items = list(predicted)
    concordant = 0
    discordant = 0
    for i in range(k):
        for j in range(i + 1, k):
            a, b = items[i], items[j]
            pred_sign = pred_pos[a] - pred_pos[b]
            gold_sign = gold_pos[a] - gold_pos[b]
            if pred_sign * gold_sign > 0:
                concordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / (k * (k - 1) / 2)


def item_precision_at_1(scores: Mapping[str, float], gold_best: str) -> float:
    """1.0 iff gold_best is the strict unique maximum."""
    top = max(scores.values())
    winners = [aid for aid, s in scores.items() if s == top]
    return 1.0 if winners == [gold_best] else 0.0


def precision_at_1(items: Sequence[tuple[Mapping[str, float], str]]) -> float:
    """Mean over (scores, gold_best_id) items."""
    if not items:
        raise MissingLabels("precision_at_1 needs at least one item")
    return sum(item_precision_at_1(scores, best) for scores, best in items) / len(items)


def token_f1(prediction: str, gold: str) -> float:
    """Multiset token F1 after answer normalization."""
    pred_tokens = answer_tokens(prediction)
    gold_tokens = answer_tokens(gold)
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def binary_eval(items: Sequence[Sequence[tuple[str, float]]]) -> tuple[float, float]:
    """Pairwise accuracy and induced-label F1 over (label, score) answers.

    Accuracy: over every within-item (correct, incorrect) pair, count
    score(correct) > score(incorrect); ties lose. F1: an answer is
    predicted positive iff it wins a strict majority of its within-item
    comparisons against opposite-label answers; gold positive = correct.
    """
    if not items:
        raise MissingLabels("binary_eval needs at least one item")
    pair_total = 0
    pair_wins = 0
    tp = fp = fn = 0
    for item in items:
        if any(lab not in ("correct", "incorrect") for lab, _ in item):
            raise MissingLabels("binary_eval labels must be 'correct' or 'incorrect'")
        correct = [(lab, s) for lab, s in item if lab == "correct"]
        incorrect = [(lab, s) for lab, s in item if lab == "incorrect"]
        if not correct or not incorrect:
            raise MissingLabels("binary_eval items need both a correct and an incorrect answer")
        for _, sc in correct:
            for _, si in incorrect:
                pair_total += 1
                if sc > si:
                    pair_wins += 1
        for label, score in item:
            opponents = incorrect if label == "correct" else correct
            wins = sum(1 for _, other in opponents if score > other)
            predicted_positive = wins * 2 > len(opponents)
            if predicted_positive and label == "correct":
                tp += 1
            elif predicted_positive and label == "incorrect":
                fp += 1
            elif not predicted_positive and label == "correct":
                fn += 1
    acc = pair_wins / pair_total
    if tp == 0:
        return acc, 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return acc, 2 * precision * recall / (precision + recall)
