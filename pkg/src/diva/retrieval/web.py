"""Web search client with live (Serper-style) and record/replay modes.

Replay mode never touches the network, so tests and offline runs are safe.
Fixture files are JSON dicts keyed by a hash of the query text; each entry
stores the raw hit list as {"title", "url", "snippet"} objects.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Any, Callable

import requests

from ..errors import ProviderError, QuotaExceeded, SourceDisabled, ValidationError
from .local import SNIPPET_CAP, RetrievalConfig, SearchResult

DEFAULT_ENDPOINT = "https://google.serper.dev/search"

# transport(url, payload, headers, timeout_s) -> (status_code, parsed body)
WebTransportFn = Callable[[str, dict[str, Any], dict[str, str], float], tuple[int, Any]]


def query_key(query: str) -> str:
    return hashlib.sha256(query.encode("utf-8")).hexdigest()[:16]


def _requests_transport(
    url: str, payload: dict[str, Any], headers: dict[str, str], timeout: float
) -> tuple[int, Any]:
    try:
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise ProviderError(0, str(exc)) from exc
    try:
        body = resp.json() if resp.content else {}
    except ValueError:
        body = {}
    return resp.status_code, body


class WebClient:
    """Snippet search over a provider API or a recorded fixture file.

    mode="replay" answers only from fixtures; mode="live" calls the
    provider; mode="record" calls the provider and appends fixtures.
    Concurrent calls are bounded by max_in_flight.
    """

    def __init__(
        self,
        mode: str = "replay",
        fixtures_path: str | Path | None = None,
        endpoint: str = DEFAULT_ENDPOINT,
        transport: WebTransportFn | None = None,
        timeout: float = 15.0,
        max_in_flight: int = 4,
    ):
        if mode not in ("replay", "live", "record"):
            raise ValidationError(f"unknown web client mode {mode!r}")
        if mode in ("replay", "record") and fixtures_path is None:
            raise ValidationError(f"mode {mode!r} requires a fixtures path")
        if max_in_flight < 1:
            raise ValidationError("max_in_flight must be >= 1")
        self.mode = mode
        self.endpoint = endpoint
        self.timeout = timeout
        self._transport = transport or _requests_transport
        self._gate = threading.Semaphore(max_in_flight)
        self._lock = threading.Lock()
        self._fixtures_path = Path(fixtures_path) if fixtures_path is not None else None
        self._fixtures: dict[str, Any] = {}
        if self._fixtures_path is not None and self._fixtures_path.exists():
            with open(self._fixtures_path, encoding="utf-8") as fh:
                self._fixtures = json.load(fh)

    def _fetch_live(self, query: str, k: int) -> list[dict[str, str]]:
        api_key = os.environ.get("SEARCH_API_KEY", "").strip()
        headers = {"X-API-KEY": api_key, "Content-Type": "application/json"}
        payload = {"q": query, "num": k}
        with self._gate:
            status, body = self._transport(self.endpoint, payload, headers, self.timeout)
        if status == 429:
            raise QuotaExceeded(status, "provider quota exhausted")
        if status != 200:
            raise ProviderError(status, str(body)[:200])
        organic = body.get("organic", []) if isinstance(body, dict) else []
        return [
            {
                "title": str(hit.get("title", "")),
                "url": str(hit.get("link", hit.get("url", ""))),
                "snippet": str(hit.get("snippet", "")),
            }
            for hit in organic
        ]

    def _fetch(self, query: str, k: int) -> list[dict[str, str]]:
        key = query_key(query)
        if self.mode == "replay":
            entry = self._fixtures.get(key)
            if entry is None:
                raise ProviderError(0, f"no recorded fixture for query {query!r}")
            return entry["hits"]
        hits = self._fetch_live(query, k)
        if self.mode == "record":
            with self._lock:
                self._fixtures[key] = {"query": query, "hits": hits}
                assert self._fixtures_path is not None
                tmp = self._fixtures_path.with_suffix(".tmp")
                with open(tmp, "w", encoding="utf-8") as fh:
                    json.dump(self._fixtures, fh, indent=2, sort_keys=True)
                tmp.replace(self._fixtures_path)
        return hits

    def search(self, query: str, cfg: RetrievalConfig) -> list[SearchResult]:
        if "web" not in cfg.enabled_sources:
            raise SourceDisabled("web")
        if not query.strip():
            raise ValidationError("query must be non-empty")
        hits = self._fetch(query, cfg.k_web)
        results = []
        for rank, hit in enumerate(hits[: cfg.k_web], start=1):
            snippet = hit.get("snippet", "") or hit.get("title", "") or "(no snippet)"
            results.append(
                SearchResult(
                    source="web",
                    title=hit.get("title", ""),
                    snippet=snippet[:SNIPPET_CAP],
                    rank=rank,
                    origin_id=hit.get("url", ""),
                )
            )
        return results


def search_web(query: str, cfg: RetrievalConfig, client: WebClient) -> list[SearchResult]:
    return client.search(query, cfg)
