"""Shared test plumbing: fixture paths, tiny backends, and a stub scorer service."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from diva.compress import CompressedTrajectory
from diva.config import RunConfig, load_config
from diva.gateway import LlmBackend, MockScript

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES = REPO_ROOT / "fixtures"
DEMO = FIXTURES / "mock_demo"
SHARED = FIXTURES / "shared"


@pytest.fixture(scope="session")
def demo_dir() -> Path:
    return DEMO


@pytest.fixture(scope="session")
def shared_dir() -> Path:
    return SHARED


@pytest.fixture()
def demo_cfg() -> RunConfig:
    return load_config(DEMO / "config.ini")


def script_backend(turns) -> LlmBackend:
    return LlmBackend(kind="mock", script=MockScript(turns))


def replies_backend(*replies: str) -> LlmBackend:
    return LlmBackend(kind="mock", script=MockScript.from_replies(list(replies)))


def make_ct(facts=("a fact",), reasoning="because the evidence says so",
            verdict="correct", answer_id="Answer1") -> CompressedTrajectory:
    return CompressedTrajectory(
        useful_facts=tuple(facts), reasoning=reasoning, verdict=verdict, answer_id=answer_id
    )


class _StubScorerHandler(BaseHTTPRequestHandler):
    """Speaks the shared scoring protocol; scoring logic is injected."""

    def log_message(self, *args):  # keep test output clean
        pass

    def do_POST(self):
        server: StubScorerServer = self.server  # type: ignore[assignment]
        server.request_count += 1
        if server.force_status is not None:
            self._reply(server.force_status, {"error": "forced failure"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            self._reply(400, {"error": "body is not valid JSON"})
            return
        problem = validate_score_request(payload)
        if problem:
            self._reply(400, {"error": problem})
            return
        score = server.score_fn(
            payload["question"], payload["answer"],
            payload.get("facts", []), payload.get("reasoning", ""),
        )
        self._reply(200, {"score": score})

    def _reply(self, status: int, body: dict):
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def validate_score_request(payload) -> str | None:
    """Shared-protocol request validation; returns a problem string or None."""
    if not isinstance(payload, dict):
        return "body must be a JSON object"
    for key in ("question", "answer"):
        if not isinstance(payload.get(key), str) or not payload[key].strip():
            return f"{key!r} must be a non-empty string"
    facts = payload.get("facts", [])
    if not isinstance(facts, list) or any(not isinstance(f, str) for f in facts):
        return "'facts' must be a list of strings"
    if not isinstance(payload.get("reasoning", ""), str):
        return "'reasoning' must be a string"
    return None


class StubScorerServer(ThreadingHTTPServer):
    def __init__(self, score_fn):
        super().__init__(("127.0.0.1", 0), _StubScorerHandler)
        self.score_fn = score_fn
        self.request_count = 0
        self.force_status: int | None = None

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}/score"


@pytest.fixture()
def stub_scorer():
    """A live HTTP scorer stub; yields the server, scoring answer length by default."""
    server = StubScorerServer(lambda q, a, facts, reasoning: float(len(a)) / 100.0)
    thread = threading.Thread(target=lambda: server.serve_forever(poll_interval=0.01), daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()
