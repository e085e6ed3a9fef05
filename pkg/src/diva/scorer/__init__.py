"""Discriminative scorer: features, head, margin-ranking training, ranking."""

from .features import HASHED_DIM, Featurizer, FeatureVector, extract_features
from .head import (
    ARCHITECTURES,
    RankedAnswer,
    ScorerHead,
    head_from_json,
    head_to_json,
    init_head,
    load_head,
    loss_gradient,
    margin_ranking_loss,
    predict_score,
    rank_scored,
    save_head,
)
from .remote import RemoteScorer
from .scoring import rank_answers, score_candidate
from .train import (
    PreferencePair,
    TrainConfig,
    TrainResult,
    featurize_pairs,
    pair_feature_texts,
    pairwise_accuracy,
    train_scorer,
)

__all__ = [
    "ARCHITECTURES",
    "Featurizer",
    "FeatureVector",
    "HASHED_DIM",
    "PreferencePair",
    "RankedAnswer",
    "RemoteScorer",
    "ScorerHead",
    "TrainConfig",
    "TrainResult",
    "extract_features",
    "featurize_pairs",
    "head_from_json",
    "head_to_json",
    "init_head",
    "load_head",
    "loss_gradient",
    "margin_ranking_loss",
    "pair_feature_texts",
    "pairwise_accuracy",
    "predict_score",
    "rank_answers",
    "rank_scored",
    "save_head",
    "score_candidate",
    "train_scorer",
]
