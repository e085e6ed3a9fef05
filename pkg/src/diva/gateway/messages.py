"""Chat-completion access to remote HTTP endpoints and deterministic mocks.

A backend is an immutable descriptor; per-run mutable state (the mock
script) is a separate object the descriptor points to. Remote backends
speak the de-facto JSON chat protocol: POST {model, messages, temperature,
...} -> {"choices": [{"message": {...}}]}. The transport is injectable so
tests can count attempts or fail on purpose.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import requests

from ..errors import ProtocolError, ScriptExhausted, Transport, ValidationError

ROLES = ("system", "user", "assistant", "tool")

# Sentinel matcher that matches any message.
ANY = "any"


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValidationError(f"unknown chat role {self.role!r}")
        if self.role in ("user", "assistant") and not self.content.strip():
            raise ValidationError(f"{self.role} message content must be non-empty")


def validate_conversation(messages: Sequence[ChatMessage]) -> None:
    """Reject empty conversations, bad final roles, and back-to-back assistant turns."""
    if not messages:
        raise ValidationError("conversation must contain at least one message")
    if messages[-1].role not in ("user", "tool"):
        raise ValidationError("last message role must be 'user' or 'tool'")
    for prev, cur in zip(messages, messages[1:]):
        if prev.role == "assistant" and cur.role == "assistant":
            raise ValidationError("two consecutive assistant messages")


@dataclass(frozen=True)
class ChatParams:
    temperature: float = 0.0
    max_tokens: int = 1024
    seed: int | None = None


class MockScript:
    """Ordered scripted turns consumed by matcher.

    Each turn is (matcher, reply). A chat call consumes the first
    unconsumed turn whose matcher occurs as a substring of the last
    user/tool message; the matcher "any" always matches. Replaying the
    same script state against the same inputs yields identical replies.
    """

    def __init__(self, turns: Sequence[tuple[str, str]]):
        self._turns = [(m, r) for m, r in turns]
        self._consumed = [False] * len(self._turns)

    @classmethod
    def from_replies(cls, replies: Sequence[str]) -> "MockScript":
        return cls([(ANY, r) for r in replies])

    @property
    def cursor(self) -> int:
        """Number of consumed turns (always <= len(turns))."""
        return sum(self._consumed)

    @property
    def remaining(self) -> int:
        return len(self._turns) - self.cursor

    def copy(self) -> "MockScript":
        dup = MockScript(self._turns)
        dup._consumed = list(self._consumed)
        return dup

    def next_reply(self, last_content: str) -> str:
        for i, (matcher, reply) in enumerate(self._turns):
            if self._consumed[i]:
                continue
            if matcher == ANY or matcher in last_content:
                self._consumed[i] = True
                return reply
        if self.remaining == 0:
            raise ScriptExhausted("mock script has no remaining turns")
        raise ScriptExhausted(
            f"no remaining mock turn matches message starting {last_content[:80]!r}"
        )


# transport(url, payload, timeout_s) -> parsed JSON body
TransportFn = Callable[[str, dict[str, Any], float], dict[str, Any]]


class TransientTransportError(Exception):
    """Raised by transports for failures worth retrying."""


def _requests_transport(url: str, payload: dict[str, Any], timeout: float) -> dict[str, Any]:
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get("LLM_API_KEY", "").strip()
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise TransientTransportError(str(exc)) from exc
    if resp.status_code == 429 or resp.status_code >= 500:
        raise TransientTransportError(f"HTTP {resp.status_code}")
    if resp.status_code != 200:
        raise ProtocolError(f"HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        return resp.json()
    except ValueError as exc:
        raise ProtocolError(f"non-JSON response body: {exc}") from exc


@dataclass(frozen=True)
class LlmBackend:
    """Immutable backend descriptor; safe to share across threads.

    kind="mock" requires `script` (stateful, one pipeline run each);
    kind="remote" requires `endpoint` and optionally a custom transport.
    """

    kind: str
    model_name: str = "mock-model"
    endpoint: str = ""
    timeout: float = 30.0
    max_retries: int = 2
    script: MockScript | None = field(default=None, compare=False)
    transport: TransportFn | None = field(default=None, compare=False)
    retry_backoff_s: float = 0.0

    def __post_init__(self):
        if self.kind not in ("remote", "mock"):
            raise ValidationError(f"unknown backend kind {self.kind!r}")
        if self.timeout <= 0:
            raise ValidationError("backend timeout must be > 0")
        if self.kind == "remote" and not self.endpoint.startswith(("http://", "https://")):
            raise ValidationError(f"remote backend endpoint is not a valid URL: {self.endpoint!r}")

    def with_script(self, script: MockScript) -> "LlmBackend":
        return replace(self, script=script)


def mock_backend(script: MockScript, model_name: str = "mock-model") -> LlmBackend:
    return LlmBackend(kind="mock", model_name=model_name, script=script)


def chat_complete(
    backend: LlmBackend,
    messages: Sequence[ChatMessage],
    params: ChatParams | None = None,
) -> ChatMessage:
    """Run one chat turn and return the assistant message.

    Mock backends consume their script; remote backends retry transient
    transport failures up to backend.max_retries (total attempts =
    1 + max_retries), then raise Transport.
    """
    params = params or ChatParams()
    validate_conversation(messages)

    if backend.kind == "mock":
        if backend.script is None:
            raise ValidationError("mock backend has no script attached")
        last = messages[-1].content
        return ChatMessage("assistant", backend.script.next_reply(last))

    payload: dict[str, Any] = {
        "model": backend.model_name,
        "messages": [{"role": m.role, "content": m.content} for m in messages],
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
    }
    if params.seed is not None:
        payload["seed"] = params.seed

    transport = backend.transport or _requests_transport
    attempts = 1 + max(0, backend.max_retries)
    last_err: Exception | None = None
    for attempt in range(attempts):
        try:
            body = transport(backend.endpoint, payload, backend.timeout)
            return _parse_chat_response(body)
        except TransientTransportError as exc:
            last_err = exc
            if attempt + 1 < attempts and backend.retry_backoff_s > 0:
                time.sleep(backend.retry_backoff_s * (attempt + 1))
    raise Transport(backend.endpoint, last_err or "unknown transport failure")


def _parse_chat_response(body: dict[str, Any]) -> ChatMessage:
    try:
        message = body["choices"][0]["message"]
        content = message["content"]
        role = message.get("role", "assistant")
    except (KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"malformed chat response: {exc!r}") from exc
    if not isinstance(content, str) or not content.strip():
        raise ProtocolError("chat response content missing or empty")
    return ChatMessage(role, content)
