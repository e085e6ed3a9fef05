"""Pairwise margin ranking loss.

The scalar form is the contract shared with the companion scoring package
(pinned by fixtures/shared/hinge_cases.json); the tensor form is the same
formula on torch tensors for use inside the training loop.
"""

from __future__ import annotations

import torch


def margin_ranking_loss(score_good: float, score_bad: float, margin: float) -> float:
    """max(0, margin - (score_good - score_bad)); margin must be positive."""
    if margin <= 0.0:
        raise ValueError(f"margin must be positive, got {margin}")
    return max(0.0, margin - (score_good - score_bad))


def margin_ranking_loss_torch(
    scores_good: torch.Tensor, scores_bad: torch.Tensor, margin: float
) -> torch.Tensor:
    """Mean hinge over a batch of (good, bad) score pairs."""
    if margin <= 0.0:
        raise ValueError(f"margin must be positive, got {margin}")
    return torch.relu(margin - (scores_good - scores_bad)).mean()
