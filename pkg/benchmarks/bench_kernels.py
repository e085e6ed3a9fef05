"""Throughput comparison: compiled kernels vs the pure-Python fallback.

Runs both implementations on identical inputs, verifies they agree
bit-for-bit, and reports wall time plus speedup. Usage:

    python3 benchmarks/bench_kernels.py [--tokens 200000] [--docs 50000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from diva._kernels import _pure

try:
    from diva._kernels import _native
except ImportError:
    _native = None


def _token_stream(n_tokens: int, seed: int) -> list[list[str]]:
    """Documents of ~100 lowercase word tokens, realistic hash-input sizes."""
    rng = np.random.default_rng(seed)
    vocabulary = [f"word{i}" for i in range(5000)]
    docs = []
    remaining = n_tokens
    while remaining > 0:
        size = int(min(remaining, rng.integers(60, 140)))
        docs.append([vocabulary[i] for i in rng.integers(0, len(vocabulary), size=size)])
        remaining -= size
    return docs


def bench_hashing(impl, docs: list[list[str]], dim: int) -> tuple[float, list[dict]]:
    start = time.perf_counter()
    results = [impl.hashed_ngram_counts(doc, dim) for doc in docs]
    return time.perf_counter() - start, results


def _postings(n_docs: int, n_terms: int, seed: int):
    rng = np.random.default_rng(seed)
    doc_lens = rng.integers(20, 400, size=n_docs).astype(np.float64)
    avgdl = float(doc_lens.mean())
    terms = []
    for _ in range(n_terms):
        df = int(rng.integers(n_docs // 100, n_docs // 2))
        doc_idx = np.sort(rng.choice(n_docs, size=df, replace=False)).astype(np.int32)
        tf = rng.integers(1, 8, size=df).astype(np.int32)
        idf = float(np.log(1.0 + (n_docs - df + 0.5) / (df + 0.5)))
        terms.append((idf, doc_idx, tf))
    return doc_lens, avgdl, terms


def bench_bm25(impl, n_docs: int, doc_lens, avgdl, terms) -> tuple[float, np.ndarray]:
    scores = np.zeros(n_docs, dtype=np.float64)
    start = time.perf_counter()
    for idf, doc_idx, tf in terms:
        impl.bm25_accumulate(scores, idf, doc_idx, tf, doc_lens, avgdl, 1.2, 0.75)
    return time.perf_counter() - start, scores


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tokens", type=int, default=200_000, help="tokens hashed per run")
    parser.add_argument("--docs", type=int, default=50_000, help="corpus size for BM25")
    parser.add_argument("--terms", type=int, default=200, help="query terms accumulated")
    parser.add_argument("--dim", type=int, default=16_384, help="feature hash buckets")
    args = parser.parse_args()

    if _native is None:
        print("compiled extension not built; benchmarking the pure fallback only")
    impls = [("pure", _pure)] + ([("native", _native)] if _native else [])

    docs = _token_stream(args.tokens, seed=1)
    n_grams = sum(2 * len(d) - 1 for d in docs)
    print(f"\nfeature hashing: {len(docs)} docs, {n_grams} n-grams, dim={args.dim}")
    hash_times, hash_results = {}, {}
    for name, impl in impls:
        hash_times[name], hash_results[name] = bench_hashing(impl, docs, args.dim)
        rate = n_grams / hash_times[name] / 1e6
        print(f"  {name:>7}: {hash_times[name] * 1e3:8.1f} ms   {rate:6.2f} M n-grams/s")
    if _native:
        assert hash_results["pure"] == hash_results["native"], "hash outputs differ"
        print(f"  parity: identical buckets; speedup x{hash_times['pure'] / hash_times['native']:.1f}")

    doc_lens, avgdl, terms = _postings(args.docs, args.terms, seed=2)
    postings = sum(len(t[1]) for t in terms)
    print(f"\nBM25 accumulation: {args.docs} docs, {args.terms} terms, {postings} postings")
    bm25_times, bm25_scores = {}, {}
    for name, impl in impls:
        bm25_times[name], bm25_scores[name] = bench_bm25(impl, args.docs, doc_lens, avgdl, terms)
        rate = postings / bm25_times[name] / 1e6
        print(f"  {name:>7}: {bm25_times[name] * 1e3:8.1f} ms   {rate:6.2f} M postings/s")
    if _native:
        identical = np.array_equal(bm25_scores["pure"], bm25_scores["native"])
        assert identical, "BM25 scores differ bitwise"
        print(f"  parity: scores bit-identical; speedup x{bm25_times['pure'] / bm25_times['native']:.1f}")
    print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
