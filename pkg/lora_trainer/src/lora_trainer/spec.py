"""Training specification.

The margin and maximum input length deliberately mirror the companion
package's training defaults (margin 0.1, 1024-token scorer input), so a
head trained here is interchangeable with the reference head behind the
same scoring protocol. The base model is configuration: tiny built-in
configs train from scratch in CI; any directory or hub id can be
substituted for full-scale runs.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

from .errors import SpecError

# built-in from-scratch base configurations, all far under 100M parameters
TINY_BASES: dict[str, dict[str, int]] = {
    "tiny-64x2": {
        "hidden_size": 64,
        "intermediate_size": 128,
        "num_hidden_layers": 2,
        "num_attention_heads": 4,
        "num_key_value_heads": 4,
    },
    "tiny-128x4": {
        "hidden_size": 128,
        "intermediate_size": 256,
        "num_hidden_layers": 4,
        "num_attention_heads": 8,
        "num_key_value_heads": 8,
    },
}

PRECISIONS = ("fp32", "bf16")
SCHEDULES = ("constant", "cosine_decay")


@dataclass(frozen=True)
class LoraTrainSpec:
    base_model: str = "tiny-64x2"
    lora_rank: int = 8
    lora_alpha: float = 32.0
    lora_dropout: float = 0.05
    learning_rate: float = 2e-4
    schedule: str = "cosine_decay"
    epochs: int = 3
    batch_size: int = 16
    margin: float = 0.1
    max_length: int = 1024
    precision: str = "fp32"
    seed: int = 0

    def validate(self) -> None:
        problems = []
        if not self.base_model:
            problems.append("base_model must be set")
        if self.lora_rank < 1:
            problems.append(f"lora_rank must be >= 1 (got {self.lora_rank})")
        if self.lora_alpha <= 0:
            problems.append(f"lora_alpha must be > 0 (got {self.lora_alpha})")
        if not 0.0 <= self.lora_dropout < 1.0:
            problems.append(f"lora_dropout must be in [0, 1) (got {self.lora_dropout})")
        if self.learning_rate <= 0:
            problems.append(f"learning_rate must be > 0 (got {self.learning_rate})")
        if self.schedule not in SCHEDULES:
            problems.append(f"schedule must be one of {SCHEDULES} (got {self.schedule!r})")
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1 (got {self.epochs})")
        if self.batch_size < 1:
            problems.append(f"batch_size must be >= 1 (got {self.batch_size})")
        if self.margin <= 0:
            problems.append(f"margin must be > 0 (got {self.margin})")
        if self.max_length < 8:
            problems.append(f"max_length must be >= 8 (got {self.max_length})")
        if self.precision not in PRECISIONS:
            problems.append(f"precision must be one of {PRECISIONS} (got {self.precision!r})")
        if problems:
            raise SpecError(problems)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "LoraTrainSpec":
        known = {f for f in cls.__dataclass_fields__}
        spec = cls(**{k: v for k, v in obj.items() if k in known})
        spec.validate()
        return spec
