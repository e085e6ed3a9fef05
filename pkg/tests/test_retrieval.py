"""Retrieval: BM25 local search and the web client in all three modes."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diva.errors import (
    DuplicateDocId,
    EmptyCorpus,
    ProviderError,
    QuotaExceeded,
    SourceDisabled,
    ValidationError,
)
from diva.retrieval.local import (
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
from diva.retrieval.web import WebClient, query_key, search_web

# Hand-checked corpus. Scores below were computed by hand from the BM25
# formula with k1=1.2, b=0.75, idf = ln(1 + (N - df + 0.5)/(df + 0.5)),
# before the index code existed; they are frozen as an oracle.
HAND_DOCS = [
    ("d1", "Apples", "red apples and green grapes"),
    ("d2", "Wine grapes", "grapes grapes wine"),
    ("d3", "Red wine", "red wine from grapes"),
]
HAND_ORACLE = {
    "red grapes": [0.5475369270575539, 0.19749180757912582, 0.6035350218702582],
    "grapes grapes": [0.2422837639372781, 0.39498361515825164, 0.26706278524904514],
    "wine": [0.0, 0.523548346501579, 0.47000362924573563],
}
IDF_ORACLE = {"red": 0.47000362924573563, "wine": 0.47000362924573563,
              "grapes": 0.13353139262452257}


@pytest.fixture()
def hand_corpus() -> LocalCorpus:
    return build_local_index(HAND_DOCS)


class TestBm25Stats:
    def test_index_stats(self, hand_corpus):
        assert hand_corpus.size == 3
        assert hand_corpus.doc_lens.tolist() == [5.0, 3.0, 4.0]
        assert hand_corpus.avgdl == pytest.approx(4.0)

    def test_idf_formula(self, hand_corpus):
        for term, expected in IDF_ORACLE.items():
            df = int(hand_corpus.postings[term][0].shape[0])
            assert bm25_idf(hand_corpus.size, df) == pytest.approx(expected, abs=1e-15)

    def test_idf_nonnegative_even_when_df_exceeds_half(self):
        # Classic Robertson idf goes negative for df > N/2; this variant stays >= 0.
        assert bm25_idf(2, 2) > 0.0
        assert bm25_idf(10, 10) > 0.0

    def test_scores_match_hand_oracle(self, hand_corpus):
        for query, expected in HAND_ORACLE.items():
            got = bm25_scores(hand_corpus, tokenize(query))
            assert got.tolist() == pytest.approx(expected, abs=1e-12)

    def test_duplicate_query_terms_accumulate_per_occurrence(self, hand_corpus):
        once = bm25_scores(hand_corpus, ["grapes"])
        twice = bm25_scores(hand_corpus, ["grapes", "grapes"])
        assert np.allclose(twice, 2.0 * once)

    def test_unknown_terms_contribute_nothing(self, hand_corpus):
        assert bm25_scores(hand_corpus, ["zeppelin"]).tolist() == [0.0, 0.0, 0.0]


class TestBuildIndex:
    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpus):
            build_local_index([])

    def test_duplicate_doc_id_rejected(self):
        with pytest.raises(DuplicateDocId):
            build_local_index([("d1", "", "a"), ("d1", "", "b")])

    def test_load_corpus_jsonl(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        rows = [{"id": d, "title": t, "text": x} for d, t, x in HAND_DOCS]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n\n", encoding="utf-8")
        corpus = load_corpus_jsonl(path)
        assert corpus.doc_ids == ["d1", "d2", "d3"]
        assert corpus.avgdl == pytest.approx(4.0)

    def test_load_corpus_jsonl_bad_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"id": "d1"}\n', encoding="utf-8")  # missing "text"
        with pytest.raises(ValidationError):
            load_corpus_jsonl(path)


class TestSearchLocal:
    def test_ranking_matches_oracle(self, hand_corpus):
        cfg = RetrievalConfig(k_local=3)
        results = search_local("red grapes", hand_corpus, cfg)
        assert [r.origin_id for r in results] == ["d3", "d1", "d2"]
        assert [r.rank for r in results] == [1, 2, 3]
        assert all(r.source == "local" for r in results)
        assert results[0].snippet == "red wine from grapes"

    def test_top_k_truncation(self, hand_corpus):
        cfg = RetrievalConfig(k_local=1)
        results = search_local("red grapes", hand_corpus, cfg)
        assert [r.origin_id for r in results] == ["d3"]

    def test_zero_score_documents_excluded(self, hand_corpus):
        cfg = RetrievalConfig(k_local=3)
        results = search_local("wine", hand_corpus, cfg)
        assert [r.origin_id for r in results] == ["d2", "d3"]  # d1 scores zero

    def test_no_hits_returns_empty_list(self, hand_corpus):
        assert search_local("zeppelin", hand_corpus, RetrievalConfig()) == []

    def test_ties_broken_by_ascending_doc_id(self):
        corpus = build_local_index(
            [("b", "", "same words here"), ("a", "", "same words here")]
        )
        results = search_local("same words", corpus, RetrievalConfig(k_local=2))
        assert [r.origin_id for r in results] == ["a", "b"]

    def test_snippet_capped_at_500_chars(self):
        corpus = build_local_index([("big", "", "needle " + "x" * 1000)])
        results = search_local("needle", corpus, RetrievalConfig())
        assert len(results[0].snippet) == SNIPPET_CAP

    def test_source_disabled(self, hand_corpus):
        cfg = RetrievalConfig(enabled_sources=frozenset({"web"}))
        with pytest.raises(SourceDisabled):
            search_local("wine", hand_corpus, cfg)

    def test_blank_query_rejected(self, hand_corpus):
        with pytest.raises(ValidationError):
            search_local("   ", hand_corpus, RetrievalConfig())

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.sampled_from(["red", "grapes", "wine", "green"]), min_size=1, max_size=4))
    def test_result_order_is_score_descending(self, terms):
        corpus = build_local_index(HAND_DOCS)
        query = " ".join(terms)
        scores = bm25_scores(corpus, tokenize(query))
        results = search_local(query, corpus, RetrievalConfig(k_local=3))
        by_pos = {d: i for i, d in enumerate(corpus.doc_ids)}
        got = [float(scores[by_pos[r.origin_id]]) for r in results]
        assert got == sorted(got, reverse=True)
        assert all(s > 0.0 for s in got)


class TestRetrievalConfig:
    def test_k_must_be_positive(self):
        with pytest.raises(ValidationError):
            RetrievalConfig(k_web=0)
        with pytest.raises(ValidationError):
            RetrievalConfig(k_local=0)

    def test_sources_validated(self):
        with pytest.raises(ValidationError):
            RetrievalConfig(enabled_sources=frozenset())
        with pytest.raises(ValidationError):
            RetrievalConfig(enabled_sources=frozenset({"moon"}))


class TestSearchResult:
    def test_field_validation(self):
        with pytest.raises(ValidationError):
            SearchResult(source="ftp", title="t", snippet="s", rank=1, origin_id="x")
        with pytest.raises(ValidationError):
            SearchResult(source="web", title="t", snippet="", rank=1, origin_id="x")
        with pytest.raises(ValidationError):
            SearchResult(source="web", title="t", snippet="s", rank=0, origin_id="x")


# --- web client ---


def _hits(n: int, prefix: str = "hit") -> list[dict[str, str]]:
    return [
        {"title": f"{prefix} {i}", "url": f"https://e.test/{prefix}/{i}", "snippet": f"s{i}"}
        for i in range(1, n + 1)
    ]


def _fixture_file(tmp_path, mapping: dict[str, list[dict[str, str]]]):
    path = tmp_path / "web_fixtures.json"
    payload = {query_key(q): {"query": q, "hits": hits} for q, hits in mapping.items()}
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


class TestQueryKey:
    def test_is_sha256_prefix(self):
        import hashlib

        q = "famous bridge in Venice"
        assert query_key(q) == hashlib.sha256(q.encode("utf-8")).hexdigest()[:16]
        assert len(query_key(q)) == 16

    def test_distinct_queries_distinct_keys(self):
        assert query_key("a") != query_key("b")


class TestWebReplay:
    def test_replay_serves_fixture_hits(self, tmp_path):
        path = _fixture_file(tmp_path, {"venice bridge": _hits(3)})
        client = WebClient(mode="replay", fixtures_path=path)
        results = search_web("venice bridge", RetrievalConfig(k_web=10), client)
        assert [r.title for r in results] == ["hit 1", "hit 2", "hit 3"]
        assert [r.rank for r in results] == [1, 2, 3]
        assert all(r.source == "web" for r in results)
        assert results[0].origin_id == "https://e.test/hit/1"

    def test_replay_truncates_to_k_web(self, tmp_path):
        path = _fixture_file(tmp_path, {"q": _hits(8)})
        client = WebClient(mode="replay", fixtures_path=path)
        results = client.search("q", RetrievalConfig(k_web=2))
        assert len(results) == 2

    def test_replay_miss_is_provider_error_status_zero(self, tmp_path):
        path = _fixture_file(tmp_path, {"known": _hits(1)})
        client = WebClient(mode="replay", fixtures_path=path)
        with pytest.raises(ProviderError) as exc_info:
            client.search("unknown", RetrievalConfig())
        assert exc_info.value.status == 0

    def test_replay_never_calls_transport(self, tmp_path):
        calls = []

        def transport(url, payload, headers, timeout):
            calls.append(url)
            return 200, {"organic": []}

        path = _fixture_file(tmp_path, {"q": _hits(1)})
        client = WebClient(mode="replay", fixtures_path=path, transport=transport)
        client.search("q", RetrievalConfig())
        assert calls == []

    def test_replay_requires_fixture_path(self):
        with pytest.raises(ValidationError):
            WebClient(mode="replay", fixtures_path=None)

    def test_snippet_fallback_and_cap(self, tmp_path):
        hits = [
            {"title": "only title", "url": "u1", "snippet": ""},
            {"title": "t2", "url": "u2", "snippet": "y" * 1000},
        ]
        path = _fixture_file(tmp_path, {"q": hits})
        client = WebClient(mode="replay", fixtures_path=path)
        results = client.search("q", RetrievalConfig())
        assert results[0].snippet == "only title"
        assert len(results[1].snippet) == SNIPPET_CAP


class TestWebLive:
    def _client(self, transport, mode="live", fixtures_path=None):
        return WebClient(mode=mode, fixtures_path=fixtures_path, transport=transport)

    def test_live_parses_organic_hits(self):
        def transport(url, payload, headers, timeout):
            assert payload == {"q": "venice", "num": 10}
            return 200, {"organic": [{"title": "T", "link": "https://x", "snippet": "S"}]}

        results = self._client(transport).search("venice", RetrievalConfig(k_web=10))
        assert len(results) == 1
        assert results[0].title == "T"
        assert results[0].origin_id == "https://x"
        assert results[0].snippet == "S"

    def test_429_maps_to_quota_exceeded(self):
        client = self._client(lambda u, p, h, t: (429, {}))
        with pytest.raises(QuotaExceeded):
            client.search("q", RetrievalConfig())

    def test_other_http_errors_map_to_provider_error(self):
        client = self._client(lambda u, p, h, t: (503, {"error": "down"}))
        with pytest.raises(ProviderError) as exc_info:
            client.search("q", RetrievalConfig())
        assert exc_info.value.status == 503

    def test_quota_exceeded_is_a_provider_error(self):
        assert issubclass(QuotaExceeded, ProviderError)

    def test_record_mode_appends_fixture_file(self, tmp_path):
        path = tmp_path / "rec.json"

        def transport(url, payload, headers, timeout):
            return 200, {"organic": [{"title": "T", "link": "https://x", "snippet": "S"}]}

        client = WebClient(mode="record", fixtures_path=path, transport=transport)
        client.search("new query", RetrievalConfig())
        saved = json.loads(path.read_text(encoding="utf-8"))
        key = query_key("new query")
        assert saved[key]["query"] == "new query"
        assert saved[key]["hits"][0]["url"] == "https://x"

        # A replay client can now serve the recorded query with no transport.
        replay = WebClient(mode="replay", fixtures_path=path)
        results = replay.search("new query", RetrievalConfig())
        assert results[0].origin_id == "https://x"

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValidationError):
            WebClient(mode="cached", fixtures_path="x.json")

    def test_web_source_disabled(self, tmp_path):
        path = _fixture_file(tmp_path, {"q": _hits(1)})
        client = WebClient(mode="replay", fixtures_path=path)
        cfg = RetrievalConfig(enabled_sources=frozenset({"local"}))
        with pytest.raises(SourceDisabled):
            client.search("q", cfg)


class TestDemoFixtures:
    """The shipped demo web fixtures are self-consistent."""

    def test_every_entry_key_matches_its_query(self, demo_dir):
        data = json.loads((demo_dir / "web_fixtures.json").read_text(encoding="utf-8"))
        assert len(data) >= 5
        for key, entry in data.items():
            assert key == query_key(entry["query"])
            assert entry["hits"], f"query {entry['query']!r} has no hits"
            for hit in entry["hits"]:
                assert set(hit) == {"title", "url", "snippet"}
