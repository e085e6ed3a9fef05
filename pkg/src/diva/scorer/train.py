"""Margin-ranking training loop for the scoring head.

Deterministic given the seed: fixed initialization, fixed epoch shuffles,
and single-threaded numpy updates. Telemetry records the mean pre-update
loss of every epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..agent import AnswerCandidate, Question
from ..compress import CompressedTrajectory, render_scorer_input
from ..errors import EmptyDataset, NonFiniteLoss, ValidationError
from .features import Featurizer, FeatureVector, extract_features
from .head import ScorerHead, init_head, loss_gradient, margin_ranking_loss, predict_score

OPTIMIZERS = ("sgd", "adam_w")
SCHEDULES = ("constant", "cosine_decay")


@dataclass(frozen=True)
class TrainConfig:
    margin: float = 0.1
    learning_rate: float = 2e-4
    schedule: str = "cosine_decay"
    epochs: int = 3
    batch_size: int = 32
    seed: int = 0
    optimizer: str = "adam_w"
    weight_decay: float = 0.0
    max_len: int = 1024

    def __post_init__(self):
        problems = []
        if self.margin <= 0:
            problems.append("margin must be > 0")
        if self.learning_rate <= 0:
            problems.append("learning_rate must be > 0")
        if self.epochs < 1:
            problems.append("epochs must be >= 1")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if self.schedule not in SCHEDULES:
            problems.append(f"unknown schedule {self.schedule!r}")
        if self.optimizer not in OPTIMIZERS:
            problems.append(f"unknown optimizer {self.optimizer!r}")
        if problems:
            raise ValidationError("; ".join(problems))


@dataclass(frozen=True)
class PreferencePair:
    question: Question
    chosen: tuple[AnswerCandidate, CompressedTrajectory]
    rejected: tuple[AnswerCandidate, CompressedTrajectory]

    def __post_init__(self):
        if self.chosen[0].id == self.rejected[0].id:
            raise ValidationError("chosen and rejected answers must differ")


@dataclass
class TrainResult:
    head: ScorerHead
    epoch_mean_losses: list[float] = field(default_factory=list)


def pair_feature_texts(pair: PreferencePair, max_len: int) -> tuple[str, str]:
    plus = render_scorer_input(pair.question, pair.chosen[0], pair.chosen[1], max_len)
    minus = render_scorer_input(pair.question, pair.rejected[0], pair.rejected[1], max_len)
    return plus, minus


def featurize_pairs(
    pairs: Sequence[PreferencePair], fz: Featurizer, max_len: int
) -> list[tuple[FeatureVector, FeatureVector]]:
    out = []
    for pair in pairs:
        plus_text, minus_text = pair_feature_texts(pair, max_len)
        out.append((extract_features(plus_text, fz), extract_features(minus_text, fz)))
    return out


def _lr_at(cfg: TrainConfig, step: int, total_steps: int) -> float:
    if cfg.schedule == "constant":
        return cfg.learning_rate
    # cosine decay from lr to 0 over all update steps
    if total_steps <= 1:
        return cfg.learning_rate
    progress = step / (total_steps - 1)
    return cfg.learning_rate * 0.5 * (1.0 + math.cos(math.pi * progress))


class _AdamW:
    def __init__(self, params: dict[str, np.ndarray], weight_decay: float):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0
        self.beta1 = 0.9
        self.beta2 = 0.999
        self.eps = 1e-8
        self.weight_decay = weight_decay

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        for name in params:
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[name] / (1.0 - self.beta1 ** self.t)
            v_hat = self.v[name] / (1.0 - self.beta2 ** self.t)
            params[name] -= lr * (
                m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * params[name]
            )


def train_scorer(
    pairs: Sequence[PreferencePair],
    fz: Featurizer,
    cfg: TrainConfig,
    architecture: str = "linear",
    hidden: int = 32,
    initial_head: ScorerHead | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> TrainResult:
    """Fit a head on preference pairs with the margin ranking loss."""
    if not pairs:
        raise EmptyDataset("train_scorer requires at least one pair")

    features = featurize_pairs(pairs, fz, cfg.max_len)
    head = initial_head.copy() if initial_head is not None else init_head(
        architecture, fz.dim, seed=cfg.seed, hidden=hidden
    )
    if initial_head is not None and head.d != fz.dim:
        raise ValidationError("initial head dimension does not match featurizer")

    n = len(features)
    rng = np.random.default_rng(cfg.seed)
    steps_per_epoch = (n + cfg.batch_size - 1) // cfg.batch_size
    total_steps = cfg.epochs * steps_per_epoch
    optimizer = _AdamW(head.params, cfg.weight_decay) if cfg.optimizer == "adam_w" else None

    epoch_losses: list[float] = []
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for batch_no, start in enumerate(range(0, n, cfg.batch_size)):
            batch = order[start : start + cfg.batch_size]
            grads = {name: np.zeros_like(arr) for name, arr in head.params.items()}
            batch_loss = 0.0
            for idx in batch:
                v_plus, v_minus = features[idx]
                f_plus = predict_score(head, v_plus)
                f_minus = predict_score(head, v_minus)
                batch_loss += margin_ranking_loss(f_plus, f_minus, cfg.margin)
                g = loss_gradient(head, v_plus, v_minus, cfg.margin)
                for name in grads:
                    grads[name] += g[name]
            scale = 1.0 / len(batch)
            batch_loss *= scale
            if not math.isfinite(batch_loss):
                raise NonFiniteLoss(epoch, batch_no)
            for name in grads:
                grads[name] *= scale
            lr = _lr_at(cfg, step, total_steps)
            if optimizer is not None:
                optimizer.step(head.params, grads, lr)
            else:
                for name in head.params:
                    head.params[name] -= lr * grads[name]
            loss_sum += batch_loss * len(batch)
            step += 1
        mean_loss = loss_sum / n
        epoch_losses.append(mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)

    return TrainResult(head=head, epoch_mean_losses=epoch_losses)


def pairwise_accuracy(
    head: ScorerHead,
    pairs: Sequence[PreferencePair],
    fz: Featurizer,
    max_len: int = 1024,
) -> float:
    """Fraction of pairs where the chosen answer outscores the rejected one."""
    if not pairs:
        raise EmptyDataset("no pairs to evaluate")
    correct = 0
    for pair in pairs:
        plus_text, minus_text = pair_feature_texts(pair, max_len)
        f_plus = predict_score(head, extract_features(plus_text, fz))
        f_minus = predict_score(head, extract_features(minus_text, fz))
        if f_plus > f_minus:
            correct += 1
    return correct / len(pairs)
