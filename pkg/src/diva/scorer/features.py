"""Text featurizers feeding the scoring head.

The default featurizer hashes lowercased unigrams and adjacent bigrams
into a fixed number of buckets and L2-normalizes the count vector; it is
a pure function of the text. A remote embedding provider can be swapped
in behind the same interface, with a content-hash cache in front.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
import requests

from .._kernels import hashed_ngram_counts
from ..errors import EmbeddingProviderError, ValidationError

HASHED_DIM = 2 ** 14


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    norm: float

    @classmethod
    def from_array(cls, values: np.ndarray) -> "FeatureVector":
        if not np.all(np.isfinite(values)):
            raise ValidationError("feature vector contains non-finite entries")
        return cls(values=values, norm=float(np.linalg.norm(values)))

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


# transport(url, payload, timeout_s) -> parsed JSON body
EmbedTransportFn = Callable[[str, dict[str, Any], float], dict[str, Any]]


def _requests_embed_transport(url: str, payload: dict[str, Any], timeout: float) -> dict[str, Any]:
    try:
        resp = requests.post(url, json=payload, timeout=timeout)
        resp.raise_for_status()
        return resp.json()
    except (requests.RequestException, ValueError) as exc:
        raise EmbeddingProviderError(str(exc)) from exc


@dataclass
class Featurizer:
    kind: str = "hashed_text"
    dim: int = HASHED_DIM
    normalize: bool = True
    endpoint: str = ""
    timeout: float = 15.0
    transport: EmbedTransportFn | None = None
    _cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.kind not in ("hashed_text", "remote_embedding"):
            raise ValidationError(f"unknown featurizer kind {self.kind!r}")
        if self.kind == "hashed_text" and self.dim < 2:
            raise ValidationError("hashed featurizer dim must be >= 2")
        if self.kind == "remote_embedding" and not self.endpoint:
            raise ValidationError("remote_embedding featurizer requires an endpoint")


def _hashed_vector(text: str, dim: int, normalize: bool) -> np.ndarray:
    tokens = text.lower().split()
    counts = hashed_ngram_counts(tokens, dim)
    values = np.zeros(dim, dtype=np.float64)
    for bucket, count in counts.items():
        values[bucket] = float(count)
    if normalize:
        norm = float(np.linalg.norm(values))
        if norm > 0.0:
            values /= norm
    return values


def _remote_vector(text: str, fz: Featurizer) -> np.ndarray:
    key = hashlib.sha256(text.encode("utf-8")).hexdigest()
    with fz._lock:
        cached = fz._cache.get(key)
    if cached is not None:
        return cached
    transport = fz.transport or _requests_embed_transport
    body = transport(fz.endpoint, {"text": text}, fz.timeout)
    try:
        values = np.asarray(body["embedding"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise EmbeddingProviderError(f"malformed embedding response: {exc!r}") from exc
    if values.ndim != 1 or values.shape[0] == 0:
        raise EmbeddingProviderError("embedding must be a non-empty flat vector")
    if fz.normalize:
        norm = float(np.linalg.norm(values))
        if norm > 0.0:
            values = values / norm
    with fz._lock:
        fz._cache[key] = values
    return values


def extract_features(text: str, fz: Featurizer) -> FeatureVector:
    if not text.strip():
        raise ValidationError("cannot featurize empty text")
    if fz.kind == "hashed_text":
        return FeatureVector.from_array(_hashed_vector(text, fz.dim, fz.normalize))
    return FeatureVector.from_array(_remote_vector(text, fz))
