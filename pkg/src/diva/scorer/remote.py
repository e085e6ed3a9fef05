"""Client for the shared remote scoring protocol.

POST {"question", "answer", "facts": [...], "reasoning"} -> {"score": real}.
Any service speaking this protocol (including the LoRA-based one) can
stand in for the local head.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import requests

from ..errors import ProtocolError, Transport

ScoreTransportFn = Callable[[str, dict[str, Any], float], dict[str, Any]]


def _requests_score_transport(url: str, payload: dict[str, Any], timeout: float) -> dict[str, Any]:
    try:
        resp = requests.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise Transport(url, exc) from exc
    if resp.status_code != 200:
        raise ProtocolError(f"scorer endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        return resp.json()
    except ValueError as exc:
        raise ProtocolError(f"scorer endpoint returned non-JSON body: {exc}") from exc


@dataclass(frozen=True)
class RemoteScorer:
    endpoint: str
    timeout: float = 30.0
    transport: ScoreTransportFn | None = None

    def score(self, question: str, answer: str, facts: Sequence[str], reasoning: str) -> float:
        payload = {
            "question": question,
            "answer": answer,
            "facts": list(facts),
            "reasoning": reasoning,
        }
        transport = self.transport or _requests_score_transport
        body = transport(self.endpoint, payload, self.timeout)
        if not isinstance(body, dict) or "score" not in body:
            raise ProtocolError(f"scorer response missing 'score': {body!r}")
        try:
            return float(body["score"])
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"scorer 'score' is not a number: {body['score']!r}") from exc
