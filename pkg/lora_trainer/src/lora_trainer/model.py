"""Model assembly: tokenizer, base network, LoRA adapters, checkpoints.

Built-in tiny bases are Llama-architecture networks initialized from the
training-spec seed, so a checkpoint only needs to store the adapter
weights: the frozen base is rebuilt bit-identically. Adapters are rank-
decomposed updates on every attention query/value projection, and the
scalar regression head (`score`) is trained alongside them.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import torch
from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from tokenizers.trainers import WordLevelTrainer
from torch import nn
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    LlamaConfig,
    LlamaForSequenceClassification,
    PreTrainedTokenizerFast,
)

from .errors import CheckpointError
from .spec import TINY_BASES, LoraTrainSpec

CHECKPOINT_META = "checkpoint.json"
CHECKPOINT_ADAPTER = "adapter.pt"
CHECKPOINT_TOKENIZER = "tokenizer"

# modules that receive adapters, matched by attribute name anywhere in the tree
ADAPTER_TARGETS = ("q_proj", "v_proj")


class LoraLinear(nn.Module):
    """A frozen linear layer plus a trainable low-rank residual update."""

    def __init__(
        self,
        base: nn.Linear,
        rank: int,
        alpha: float,
        dropout: float,
        generator: torch.Generator,
    ):
        super().__init__()
        self.base = base
        for param in self.base.parameters():
            param.requires_grad_(False)
        # small random A, zero B: the adapter starts as an exact no-op
        self.lora_a = nn.Parameter(
            torch.randn(rank, base.in_features, generator=generator) * 0.01
        )
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        self.scaling = alpha / rank
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        update = self.dropout(x) @ self.lora_a.T @ self.lora_b.T
        return self.base(x) + update * self.scaling


def build_tokenizer(texts: Iterable[str]) -> PreTrainedTokenizerFast:
    """Whitespace word-level tokenizer fit on the training texts; [PAD] is id 0."""
    tok = Tokenizer(WordLevel(unk_token="[UNK]"))
    tok.pre_tokenizer = Whitespace()
    trainer = WordLevelTrainer(special_tokens=["[PAD]", "[UNK]"])
    tok.train_from_iterator(texts, trainer)
    return PreTrainedTokenizerFast(
        tokenizer_object=tok, pad_token="[PAD]", unk_token="[UNK]"
    )


def _build_tiny_model(spec: LoraTrainSpec, vocab_size: int) -> nn.Module:
    torch.manual_seed(spec.seed)
    config = LlamaConfig(
        vocab_size=vocab_size,
        max_position_embeddings=spec.max_length,
        pad_token_id=0,
        num_labels=1,
        **TINY_BASES[spec.base_model],
    )
    return LlamaForSequenceClassification(config)


def inject_lora(model: nn.Module, spec: LoraTrainSpec) -> int:
    """Replace every q/v projection with an adapted copy; returns the count."""
    replaced = 0
    for _, module in list(model.named_modules()):
        for attr in ADAPTER_TARGETS:
            child = getattr(module, attr, None)
            if isinstance(child, nn.Linear):
                generator = torch.Generator().manual_seed(spec.seed * 7919 + replaced)
                setattr(
                    module,
                    attr,
                    LoraLinear(
                        child,
                        spec.lora_rank,
                        spec.lora_alpha,
                        spec.lora_dropout,
                        generator,
                    ),
                )
                replaced += 1
    if replaced == 0:
        raise CheckpointError(
            f"base model {spec.base_model!r} has no {'/'.join(ADAPTER_TARGETS)} "
            "linear layers to adapt"
        )
    return replaced


def _freeze_except_adapters_and_head(model: nn.Module) -> None:
    for name, param in model.named_parameters():
        param.requires_grad_("lora_a" in name or "lora_b" in name)
    head = getattr(model, "score", None)
    if head is None:
        raise CheckpointError("model has no `score` regression head")
    for param in head.parameters():
        param.requires_grad_(True)


def build_model(spec: LoraTrainSpec, vocab_size: int) -> nn.Module:
    """Base network + adapters, with only adapters and head trainable."""
    if spec.base_model in TINY_BASES:
        model = _build_tiny_model(spec, vocab_size)
    else:
        try:
            model = AutoModelForSequenceClassification.from_pretrained(
                spec.base_model, num_labels=1
            )
        except (OSError, ValueError) as exc:
            raise CheckpointError(
                f"cannot load base model {spec.base_model!r}: {exc}"
            ) from exc
    inject_lora(model, spec)
    _freeze_except_adapters_and_head(model)
    if spec.precision == "bf16":
        model = model.to(torch.bfloat16)
    return model


def trainable_parameters(model: nn.Module) -> dict[str, torch.Tensor]:
    return {name: p for name, p in model.named_parameters() if p.requires_grad}


def count_parameters(model: nn.Module) -> tuple[int, int]:
    """(total, trainable) parameter counts."""
    total = sum(p.numel() for p in model.parameters())
    trainable = sum(p.numel() for p in model.parameters() if p.requires_grad)
    return total, trainable


@torch.no_grad()
def score_texts(
    model: nn.Module,
    tokenizer: PreTrainedTokenizerFast,
    texts: Sequence[str],
    max_length: int,
    batch_size: int = 16,
) -> list[float]:
    """Deterministic (eval-mode) scalar scores for rendered scorer inputs."""
    model.eval()
    scores: list[float] = []
    for start in range(0, len(texts), batch_size):
        batch = tokenizer(
            list(texts[start : start + batch_size]),
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=max_length,
        )
        logits = model(**batch).logits.squeeze(-1)
        scores.extend(float(v) for v in logits.reshape(-1))
    return scores


def save_checkpoint(
    path: str | Path,
    model: nn.Module,
    tokenizer: PreTrainedTokenizerFast,
    spec: LoraTrainSpec,
    history: dict | None = None,
) -> None:
    """Write spec + tokenizer + trainable weights; the base is not stored."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    total, trainable = count_parameters(model)
    meta = {
        "spec": spec.to_json(),
        "vocab_size": len(tokenizer),
        "total_parameters": total,
        "trainable_parameters": trainable,
    }
    if history:
        meta["history"] = history
    (path / CHECKPOINT_META).write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    tokenizer.save_pretrained(path / CHECKPOINT_TOKENIZER)
    torch.save(trainable_parameters(model), path / CHECKPOINT_ADAPTER)


def load_checkpoint(
    path: str | Path,
) -> tuple[nn.Module, PreTrainedTokenizerFast, LoraTrainSpec, dict]:
    """Rebuild the frozen base from the spec seed and restore the adapters."""
    path = Path(path)
    meta_file = path / CHECKPOINT_META
    if not meta_file.is_file():
        raise CheckpointError(f"not a checkpoint directory (no {CHECKPOINT_META}): {path}")
    meta = json.loads(meta_file.read_text(encoding="utf-8"))
    spec = LoraTrainSpec.from_json(meta["spec"])
    tokenizer = AutoTokenizer.from_pretrained(str(path / CHECKPOINT_TOKENIZER))
    model = build_model(spec, vocab_size=int(meta["vocab_size"]))
    state = torch.load(path / CHECKPOINT_ADAPTER, map_location="cpu")
    expected = set(trainable_parameters(model))
    if set(state) != expected:
        missing = sorted(expected - set(state))
        unexpected = sorted(set(state) - expected)
        raise CheckpointError(
            f"adapter weights do not match the rebuilt model "
            f"(missing {missing[:3]}, unexpected {unexpected[:3]})"
        )
    model.load_state_dict(state, strict=False)
    model.eval()
    return model, tokenizer, spec, meta
