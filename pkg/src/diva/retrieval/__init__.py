"""Search tools: web snippet client and local BM25 passage index."""

from .local import (
    BM25_B,
    BM25_K1,
    SNIPPET_CAP,
    LocalCorpus,
    RetrievalConfig,
    SearchResult,
    bm25_idf,
    bm25_scores,
    build_local_index,
    load_corpus_jsonl,
    search_local,
    tokenize,
)
from .web import DEFAULT_ENDPOINT, WebClient, query_key, search_web

__all__ = [
    "BM25_B",
    "BM25_K1",
    "DEFAULT_ENDPOINT",
    "LocalCorpus",
    "RetrievalConfig",
    "SNIPPET_CAP",
    "SearchResult",
    "WebClient",
    "bm25_idf",
    "bm25_scores",
    "build_local_index",
    "load_corpus_jsonl",
    "query_key",
    "search_local",
    "search_web",
    "tokenize",
]
