"""Pure-Python/numpy implementations of the hot kernels.

Used when the compiled extension is unavailable or when DIVA_PURE_PYTHON=1.
Both implementations must return bit-identical results: the hash is FNV-1a
(64-bit) over UTF-8 bytes, and BM25 contributions are accumulated with one
IEEE-754 double addition per posting, in query-term order.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "pure"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def hashed_ngram_counts(tokens: list[str], dim: int) -> dict[int, int]:
    """Bucket counts for unigrams and adjacent bigrams.

    Bigrams are hashed as "tok_i tok_{i+1}". Bucket = fnv1a64(utf8) % dim.
    """
    counts: dict[int, int] = {}
    for tok in tokens:
        bucket = fnv1a64(tok.encode("utf-8")) % dim
        counts[bucket] = counts.get(bucket, 0) + 1
    for i in range(len(tokens) - 1):
        bucket = fnv1a64((tokens[i] + " " + tokens[i + 1]).encode("utf-8")) % dim
        counts[bucket] = counts.get(bucket, 0) + 1
    return counts


def bm25_accumulate(
    scores: np.ndarray,
    idf: float,
    doc_idx: np.ndarray,
    tf: np.ndarray,
    doc_lens: np.ndarray,
    avgdl: float,
    k1: float,
    b: float,
) -> None:
    """Add one query term's BM25 contribution to `scores`, in place.

    `doc_idx`/`tf` are the term's postings (int32, one entry per document);
    `doc_lens` is indexed by document position. The arithmetic mirrors the
    native kernel expression-for-expression so results match bitwise.
    """
    if doc_idx.shape[0] == 0:
        return
    tf_f = tf.astype(np.float64)
    dl = doc_lens[doc_idx].astype(np.float64)
    norm = k1 * (1.0 - b + b * (dl / avgdl))
    scores[doc_idx] += idf * (tf_f * (k1 + 1.0)) / (tf_f + norm)
