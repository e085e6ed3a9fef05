"""Scoring head: architectures, hinge loss, gradients, ranking, checkpoints.

The head maps a feature vector to an unbounded real score. Training uses
the margin ranking loss max(0, m - (f_plus - f_minus)); at the kink the
subgradient is taken as zero (inactive branch).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import DimensionMismatch, ValidationError
from .features import FeatureVector

ARCHITECTURES = ("linear", "mlp1")

CHECKPOINT_VERSION = 1


@dataclass
class ScorerHead:
    """Parameter container; treat as immutable once trained."""

    architecture: str
    d: int
    seed: int
    params: dict[str, np.ndarray]
    hidden: int = 0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValidationError(f"unknown architecture {self.architecture!r}")
        expected = _expected_shapes(self.architecture, self.d, self.hidden)
        if set(self.params) != set(expected):
            raise ValidationError(
                f"parameters {sorted(self.params)} do not match architecture "
                f"(want {sorted(expected)})"
            )
        for name, shape in expected.items():
            if tuple(self.params[name].shape) != shape:
                raise ValidationError(
                    f"parameter {name} has shape {self.params[name].shape}, want {shape}"
                )

    def copy(self) -> "ScorerHead":
        return ScorerHead(
            architecture=self.architecture,
            d=self.d,
            seed=self.seed,
            params={k: v.copy() for k, v in self.params.items()},
            hidden=self.hidden,
        )


def _expected_shapes(architecture: str, d: int, hidden: int) -> dict[str, tuple[int, ...]]:
    if architecture == "linear":
        return {"w": (d,), "b": ()}
    return {"W1": (hidden, d), "b1": (hidden,), "w2": (hidden,), "b2": ()}


def init_head(architecture: str, d: int, seed: int = 0, hidden: int = 32) -> ScorerHead:
    """Linear heads start at zero; mlp1 uses seeded symmetric uniform init."""
    if architecture == "linear":
        params = {"w": np.zeros(d, dtype=np.float64), "b": np.zeros((), dtype=np.float64)}
        return ScorerHead("linear", d, seed, params, hidden=0)
    if architecture == "mlp1":
        if hidden < 1:
            raise ValidationError("mlp1 requires hidden >= 1")
        rng = np.random.default_rng(seed)
        lim_in = 1.0 / math.sqrt(d)
        lim_out = 1.0 / math.sqrt(hidden)
        params = {
            "W1": rng.uniform(-lim_in, lim_in, size=(hidden, d)),
            "b1": np.zeros(hidden, dtype=np.float64),
            "w2": rng.uniform(-lim_out, lim_out, size=hidden),
            "b2": np.zeros((), dtype=np.float64),
        }
        return ScorerHead("mlp1", d, seed, params, hidden=hidden)
    raise ValidationError(f"unknown architecture {architecture!r}")


def _check_dim(head: ScorerHead, dim: int) -> None:
    if dim != head.d:
        raise DimensionMismatch(head.d, dim)


def predict_score(head: ScorerHead, features: FeatureVector) -> float:
    _check_dim(head, features.dim)
    v = features.values
    if head.architecture == "linear":
        return float(head.params["w"] @ v + head.params["b"])
    z = head.params["W1"] @ v + head.params["b1"]
    return float(head.params["w2"] @ np.tanh(z) + head.params["b2"])


def margin_ranking_loss(f_plus: float, f_minus: float, m: float) -> float:
    if m <= 0:
        raise ValidationError("margin must be > 0")
    return max(0.0, m - (f_plus - f_minus))


def _score_gradients(head: ScorerHead, v: np.ndarray) -> dict[str, np.ndarray]:
    """Gradient of the raw score with respect to every parameter."""
    if head.architecture == "linear":
        return {"w": v.copy(), "b": np.ones(())}
    z = head.params["W1"] @ v + head.params["b1"]
    h = np.tanh(z)
    dz = head.params["w2"] * (1.0 - h * h)
    return {
        "W1": np.outer(dz, v),
        "b1": dz,
        "w2": h,
        "b2": np.ones(()),
    }


def loss_gradient(
    head: ScorerHead, v_plus: FeatureVector, v_minus: FeatureVector, m: float
) -> dict[str, np.ndarray]:
    """Subgradient of the hinge for one pair; zero when the pair is inactive."""
    _check_dim(head, v_plus.dim)
    _check_dim(head, v_minus.dim)
    f_plus = predict_score(head, v_plus)
    f_minus = predict_score(head, v_minus)
    if m - (f_plus - f_minus) <= 0.0:
        return {name: np.zeros_like(arr) for name, arr in head.params.items()}
    g_plus = _score_gradients(head, v_plus.values)
    g_minus = _score_gradients(head, v_minus.values)
    return {name: g_minus[name] - g_plus[name] for name in head.params}


@dataclass(frozen=True)
class RankedAnswer:
    answer_id: str
    score: float
    tie: bool


def rank_scored(scored: Sequence[tuple[str, float]]) -> list[RankedAnswer]:
    """Order (answer_id, score) pairs descending; equal scores are flagged."""
    if not scored:
        raise ValidationError("rank requires at least one candidate")
    ordered = sorted(scored, key=lambda item: (-item[1], item[0]))
    counts: dict[float, int] = {}
    for _, score in ordered:
        counts[score] = counts.get(score, 0) + 1
    return [
        RankedAnswer(answer_id=aid, score=score, tie=counts[score] > 1)
        for aid, score in ordered
    ]


def head_to_json(head: ScorerHead) -> dict[str, Any]:
    return {
        "format_version": CHECKPOINT_VERSION,
        "architecture": head.architecture,
        "d": head.d,
        "seed": head.seed,
        "hidden": head.hidden,
        "params": {name: arr.tolist() for name, arr in sorted(head.params.items())},
    }


def head_from_json(obj: Mapping[str, Any]) -> ScorerHead:
    if obj.get("format_version") != CHECKPOINT_VERSION:
        raise ValidationError(f"unsupported checkpoint version {obj.get('format_version')!r}")
    params = {name: np.asarray(values, dtype=np.float64) for name, values in obj["params"].items()}
    return ScorerHead(
        architecture=obj["architecture"],
        d=int(obj["d"]),
        seed=int(obj["seed"]),
        params=params,
        hidden=int(obj.get("hidden", 0)),
    )


def save_head(head: ScorerHead, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(head_to_json(head), fh, sort_keys=True)
        fh.write("\n")


def load_head(path: str | Path) -> ScorerHead:
    with open(path, encoding="utf-8") as fh:
        return head_from_json(json.load(fh))
