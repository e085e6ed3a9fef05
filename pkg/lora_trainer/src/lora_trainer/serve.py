"""HTTP scoring endpoint.

Implements the shared scoring protocol: POST a JSON object with
``question``, ``answer``, optional ``facts`` (list of strings, default
empty) and optional ``reasoning`` (string, default empty) to ``/`` and
receive ``{"score": <real>}``. Malformed requests get HTTP 400 with
``{"error": <message>}``; a server without a loaded checkpoint answers
503. Scoring is eval-mode and serialized behind a lock, so repeated
identical requests return identical scores.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from transformers import PreTrainedTokenizerFast
from torch import nn

from .data import render_scorer_input
from .errors import DataError
from .model import load_checkpoint, score_texts
from .spec import LoraTrainSpec


@dataclass
class ScorerBundle:
    model: nn.Module
    tokenizer: PreTrainedTokenizerFast
    spec: LoraTrainSpec


def validate_request(payload) -> str | None:
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


def load_bundle(checkpoint_dir: str | Path) -> ScorerBundle:
    model, tokenizer, spec, _ = load_checkpoint(checkpoint_dir)
    return ScorerBundle(model=model, tokenizer=tokenizer, spec=spec)


def create_app(checkpoint_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="lora-scorer")
    app.state.bundle = load_bundle(checkpoint_dir) if checkpoint_dir else None
    app.state.score_lock = threading.Lock()

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "model_loaded": app.state.bundle is not None}

    @app.post("/")
    async def score(request: Request):
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be valid JSON"}, status_code=400)
        problem = validate_request(payload)
        if problem is not None:
            return JSONResponse({"error": problem}, status_code=400)
        bundle = app.state.bundle
        if bundle is None:
            return JSONResponse({"error": "no checkpoint loaded"}, status_code=503)
        try:
            text = render_scorer_input(
                payload["question"],
                payload["answer"],
                payload.get("facts", []),
                payload.get("reasoning", ""),
                bundle.spec.max_length,
            )
        except DataError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        with app.state.score_lock:
            value = score_texts(
                bundle.model, bundle.tokenizer, [text], bundle.spec.max_length
            )[0]
        return {"score": value}

    return app
