# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: FNV-1a bucket hashing and BM25 score accumulation.

Must stay bit-identical to diva._kernels._pure; see that module for the
contract. No -ffast-math style flags are used, so double arithmetic here
matches numpy's IEEE-754 semantics operation for operation.
"""

from libc.stdint cimport int32_t, uint64_t

IMPLEMENTATION = "native"

cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325UL
cdef uint64_t FNV_PRIME = 0x100000001B3UL


cdef uint64_t _fnv1a64(const unsigned char* data, Py_ssize_t n) noexcept nogil:
    cdef uint64_t h = FNV_OFFSET
    cdef Py_ssize_t i
    for i in range(n):
        h = (h ^ <uint64_t>data[i]) * FNV_PRIME
    return h


def fnv1a64(bytes data) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    return _fnv1a64(<const unsigned char*>data, len(data))


def hashed_ngram_counts(list tokens, int dim) -> dict:
    """Bucket counts for unigrams and adjacent bigrams (see pure version)."""
    cdef dict counts = {}
    cdef Py_ssize_t i, n = len(tokens)
    cdef bytes raw
    cdef uint64_t bucket
    for i in range(n):
        raw = (<str>tokens[i]).encode("utf-8")
        bucket = _fnv1a64(<const unsigned char*>raw, len(raw)) % <uint64_t>dim
        counts[bucket] = counts.get(bucket, 0) + 1
    for i in range(n - 1):
        raw = (<str>tokens[i] + " " + <str>tokens[i + 1]).encode("utf-8")
        bucket = _fnv1a64(<const unsigned char*>raw, len(raw)) % <uint64_t>dim
        counts[bucket] = counts.get(bucket, 0) + 1
    return counts


def bm25_accumulate(
    double[::1] scores,
    double idf,
    int32_t[::1] doc_idx,
    int32_t[::1] tf,
    double[::1] doc_lens,
    double avgdl,
    double k1,
    double b,
):
    """Add one query term's BM25 contribution to `scores`, in place."""
    cdef Py_ssize_t i
    cdef int32_t d
    cdef double f, norm
    for i in range(doc_idx.shape[0]):
        d = doc_idx[i]
        f = <double>tf[i]
        norm = k1 * (1.0 - b + b * (doc_lens[d] / avgdl))
        scores[d] += idf * (f * (k1 + 1.0)) / (f + norm)
