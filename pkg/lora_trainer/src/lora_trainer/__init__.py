"""LoRA fine-tuning and serving for the pairwise answer scorer.

Trains low-rank adapters plus a scalar regression head on preference
pairs produced by the companion `diva` pipeline, and serves the result
behind the same HTTP scoring protocol the pipeline's remote scorer
backend speaks.
"""

from .data import PairExample, read_pairs_jsonl, render_scorer_input
from .errors import (
    CheckpointError,
    DataError,
    LoraError,
    SpecError,
    TrainingFailure,
)
from .losses import margin_ranking_loss, margin_ranking_loss_torch
from .model import (
    LoraLinear,
    build_model,
    build_tokenizer,
    count_parameters,
    inject_lora,
    load_checkpoint,
    save_checkpoint,
    score_texts,
    trainable_parameters,
)
from .serve import create_app, validate_request
from .spec import PRECISIONS, SCHEDULES, TINY_BASES, LoraTrainSpec
from .train import TrainResult, pairwise_accuracy, train_pairs

__all__ = [
    "CheckpointError",
    "DataError",
    "LoraError",
    "LoraLinear",
    "LoraTrainSpec",
    "PairExample",
    "PRECISIONS",
    "SCHEDULES",
    "SpecError",
    "TINY_BASES",
    "TrainResult",
    "TrainingFailure",
    "build_model",
    "build_tokenizer",
    "count_parameters",
    "create_app",
    "inject_lora",
    "load_checkpoint",
    "margin_ranking_loss",
    "margin_ranking_loss_torch",
    "pairwise_accuracy",
    "read_pairs_jsonl",
    "render_scorer_input",
    "save_checkpoint",
    "score_texts",
    "trainable_parameters",
    "train_pairs",
    "validate_request",
]

__version__ = "0.1.0"
