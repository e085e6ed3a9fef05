"""BM25 index over a local passage corpus.

Built once, then immutable; concurrent queries are safe. Scoring runs
through the shared accumulation kernel (compiled when available).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .._kernels import bm25_accumulate
from ..errors import DuplicateDocId, EmptyCorpus, SourceDisabled, ValidationError

BM25_K1 = 1.2
BM25_B = 0.75

SNIPPET_CAP = 500


def tokenize(text: str) -> list[str]:
    return text.lower().split()


@dataclass(frozen=True)
class SearchResult:
    source: str  # "web" or "local"
    title: str
    snippet: str
    rank: int
    origin_id: str

    def __post_init__(self):
        if self.source not in ("web", "local"):
            raise ValidationError(f"unknown result source {self.source!r}")
        if not self.snippet:
            raise ValidationError("result snippet must be non-empty")
        if self.rank < 1:
            raise ValidationError("result rank is 1-based")


@dataclass(frozen=True)
class RetrievalConfig:
    k_web: int = 10
    k_local: int = 3
    enabled_sources: frozenset[str] = frozenset({"web", "local"})

    def __post_init__(self):
        if self.k_web < 1 or self.k_local < 1:
            raise ValidationError("k_web and k_local must be >= 1")
        sources = frozenset(self.enabled_sources)
        object.__setattr__(self, "enabled_sources", sources)
        if not sources:
            raise ValidationError("enabled_sources must be non-empty")
        if not sources <= {"web", "local"}:
            raise ValidationError(f"unknown sources: {sorted(sources - {'web', 'local'})}")


@dataclass
class LocalCorpus:
    """Documents plus BM25 statistics; treat as read-only after build."""

    doc_ids: list[str]
    titles: list[str]
    texts: list[str]
    doc_lens: np.ndarray  # float64, tokens per document
    avgdl: float
    # term -> (doc positions int32, term frequencies int32)
    postings: dict[str, tuple[np.ndarray, np.ndarray]] = field(repr=False, default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.doc_ids)


def build_local_index(documents: Iterable[tuple[str, str, str]]) -> LocalCorpus:
    """Index (doc_id, title, text) triples. Idempotent for identical input."""
    doc_ids: list[str] = []
    titles: list[str] = []
    texts: list[str] = []
    seen: set[str] = set()
    for doc_id, title, text in documents:
        if doc_id in seen:
            raise DuplicateDocId(f"duplicate doc_id {doc_id!r}")
        seen.add(doc_id)
        doc_ids.append(doc_id)
        titles.append(title)
        texts.append(text)
    if not doc_ids:
        raise EmptyCorpus("cannot index an empty document set")

    lens = np.zeros(len(doc_ids), dtype=np.float64)
    raw: dict[str, list[tuple[int, int]]] = {}
    for pos, text in enumerate(texts):
        tokens = tokenize(text)
        lens[pos] = float(len(tokens))
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            raw.setdefault(term, []).append((pos, tf))

    postings = {
        term: (
            np.array([p for p, _ in plist], dtype=np.int32),
            np.array([t for _, t in plist], dtype=np.int32),
        )
        for term, plist in raw.items()
    }
    avgdl = float(lens.mean())
    return LocalCorpus(doc_ids, titles, texts, lens, avgdl, postings)


def load_corpus_jsonl(path: str | Path) -> LocalCorpus:
    """Read {"id","title","text"} objects, one per line."""
    docs = []
    if not Path(path).is_file():
        raise ValidationError(f"corpus file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                docs.append((str(obj["id"]), str(obj.get("title", "")), str(obj["text"])))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValidationError(f"bad corpus line {lineno}: {exc}") from exc
    return build_local_index(docs)


def bm25_idf(n_docs: int, df: int) -> float:
    """Non-negative idf: ln(1 + (N - df + 0.5) / (df + 0.5))."""
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def bm25_scores(corpus: LocalCorpus, query_tokens: Sequence[str]) -> np.ndarray:
    """Score every document; duplicate query tokens contribute per occurrence."""
    scores = np.zeros(corpus.size, dtype=np.float64)
    for term in query_tokens:
        entry = corpus.postings.get(term)
        if entry is None:
            continue
        doc_idx, tf = entry
        idf = bm25_idf(corpus.size, int(doc_idx.shape[0]))
        bm25_accumulate(scores, idf, doc_idx, tf, corpus.doc_lens, corpus.avgdl, BM25_K1, BM25_B)
    return scores


def search_local(query: str, corpus: LocalCorpus, cfg: RetrievalConfig) -> list[SearchResult]:
    """Top k_local passages by BM25; ties broken by ascending doc_id."""
    if "local" not in cfg.enabled_sources:
        raise SourceDisabled("local")
    if corpus.size == 0:
        raise EmptyCorpus("corpus has no documents")
    if not query.strip():
        raise ValidationError("query must be non-empty")

    scores = bm25_scores(corpus, tokenize(query))
    hits = [(float(scores[i]), corpus.doc_ids[i], i) for i in range(corpus.size) if scores[i] > 0.0]
    hits.sort(key=lambda h: (-h[0], h[1]))
    results = []
    for rank, (_, doc_id, pos) in enumerate(hits[: cfg.k_local], start=1):
        results.append(
            SearchResult(
                source="local",
                title=corpus.titles[pos],
                snippet=corpus.texts[pos][:SNIPPET_CAP],
                rank=rank,
                origin_id=doc_id,
            )
        )
    return results
