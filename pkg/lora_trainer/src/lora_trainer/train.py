"""Pairwise fine-tuning loop.

Each step scores the preferred and dispreferred rendered inputs with the
same network and applies a margin ranking loss, so training never needs
absolute labels — only the preference direction. Only adapter and head
parameters receive gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
from transformers import PreTrainedTokenizerFast

from .data import PairExample
from .errors import DataError, TrainingFailure
from .losses import margin_ranking_loss_torch
from .model import build_model, build_tokenizer, count_parameters, score_texts
from .spec import LoraTrainSpec


@dataclass
class TrainResult:
    examples: int
    epoch_losses: list[float] = field(default_factory=list)
    total_parameters: int = 0
    trainable_parameters: int = 0

    def to_json(self) -> dict:
        return {
            "examples": self.examples,
            "epoch_losses": self.epoch_losses,
            "total_parameters": self.total_parameters,
            "trainable_parameters": self.trainable_parameters,
        }


def _cosine_factor(step: int, total_steps: int) -> float:
    if total_steps <= 1:
        return 1.0
    progress = min(step, total_steps - 1) / (total_steps - 1)
    return 0.5 * (1.0 + math.cos(math.pi * progress))


def _batch_scores(
    model: torch.nn.Module,
    tokenizer: PreTrainedTokenizerFast,
    texts: list[str],
    max_length: int,
) -> torch.Tensor:
    batch = tokenizer(
        texts,
        return_tensors="pt",
        padding=True,
        truncation=True,
        max_length=max_length,
    )
    return model(**batch).logits.squeeze(-1).reshape(-1)


def train_pairs(
    spec: LoraTrainSpec, examples: list[PairExample]
) -> tuple[torch.nn.Module, PreTrainedTokenizerFast, TrainResult]:
    """Fit adapters + head on preference pairs; returns the trained model.

    Epoch losses are the means of pre-update batch losses, so with a
    working configuration they decrease monotonically across epochs.
    """
    spec.validate()
    if not examples:
        raise DataError("no trainable pairs: every record was filtered out or the file was empty")

    corpus = [ex.chosen_text for ex in examples] + [ex.rejected_text for ex in examples]
    tokenizer = build_tokenizer(corpus)
    model = build_model(spec, vocab_size=len(tokenizer))

    trainables = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(trainables, lr=spec.learning_rate)
    n_batches = math.ceil(len(examples) / spec.batch_size)
    total_steps = spec.epochs * n_batches
    if spec.schedule == "cosine_decay":
        scheduler = torch.optim.lr_scheduler.LambdaLR(
            optimizer, lambda step: _cosine_factor(step, total_steps)
        )
    else:
        scheduler = None

    rng = np.random.default_rng(spec.seed)
    result = TrainResult(examples=len(examples))
    result.total_parameters, result.trainable_parameters = count_parameters(model)

    model.train()
    for epoch in range(spec.epochs):
        order = rng.permutation(len(examples))
        batch_losses = []
        for start in range(0, len(examples), spec.batch_size):
            batch = [examples[i] for i in order[start : start + spec.batch_size]]
            scores_good = _batch_scores(
                model, tokenizer, [ex.chosen_text for ex in batch], spec.max_length
            )
            scores_bad = _batch_scores(
                model, tokenizer, [ex.rejected_text for ex in batch], spec.max_length
            )
            loss = margin_ranking_loss_torch(scores_good, scores_bad, spec.margin)
            loss_value = float(loss.detach())
            if not math.isfinite(loss_value):
                raise TrainingFailure(
                    f"non-finite loss {loss_value} at epoch {epoch} "
                    f"batch {start // spec.batch_size}"
                )
            batch_losses.append(loss_value)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            if scheduler is not None:
                scheduler.step()
        result.epoch_losses.append(float(np.mean(batch_losses)))
    model.eval()
    return model, tokenizer, result


def pairwise_accuracy(
    model: torch.nn.Module,
    tokenizer: PreTrainedTokenizerFast,
    examples: list[PairExample],
    max_length: int,
    batch_size: int = 16,
) -> float:
    """Fraction of pairs where the preferred answer strictly outscores the other."""
    if not examples:
        raise DataError("no pairs to evaluate")
    chosen = score_texts(
        model, tokenizer, [ex.chosen_text for ex in examples], max_length, batch_size
    )
    rejected = score_texts(
        model, tokenizer, [ex.rejected_text for ex in examples], max_length, batch_size
    )
    wins = sum(1 for good, bad in zip(chosen, rejected) if good > bad)
    return wins / len(examples)
