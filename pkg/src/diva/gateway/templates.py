"""Prompt templates: external text assets, strict rendering, drift checksums.

Templates live as plain-text files under assets/ so they can be audited and
diffed without touching code. Each file is pinned by SHA-256; a modified
asset fails loudly at load time instead of silently changing behavior.

Placeholders use {{name}} syntax. Rendering is strict both ways: every
placeholder must be bound, and no binding may name a placeholder the
template does not declare.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

from ..errors import MissingBinding, TemplateDrift, UnknownPlaceholder

_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")

# Pinned SHA-256 of every shipped asset, keyed by template id.
_CHECKSUMS = {
    "agentic_search": "b36ae9b20aab522761aec68f981db8cbae8da957329ecb544f5459c4a17512ad",
    "context_compression": "c310f09983a936b2e9b2a0fe2dbdec2c2fb9c2e0d1dd97a2d43949061d94a973",
    "naive_generative_verify": "9eab2f680fe2559ad99cedcd1e340a157d05b8ca3218a8302a82959c16812ec1",
    "agentic_generative_verify": "ce006be6761806c1ee7276fa5ae3dec5cd3139cc3798e2e486c01d396d26b697",
    "agentic_generative_score": "9dd752f487d64abc4a04c4671702d984d1ebbfb05687305c1746d26dda8d04c2",
    # in-repo judge/decomposition prompts (not part of the core template set)
    "judge_label": "ad953e1729d0562f7979aa7a47623d3c3fb36b10bd985f29af54ff4daaf9fb02",
    "judge_pairwise": "523a903abed7dce3e364920743adfb8dce45b05882fbb91bd6bfceab75ecefda",
    "judge_verifiable": "07f2e4dd8e5023f039243331dc63af239fc96b86820821bd7cff82c4db7dd09b",
    "claim_decompose": "0332ec915cf59c786742ccaf2814607195ee03d93d0d3340161d2dc19d6085a7",
    "answer_generate": "de8209b994ec9429e30f2cac43001adb2662e04d840e9c896e9696d5e6240b55",
}

# Declared placeholder sets; load() verifies the asset uses exactly these.
_PLACEHOLDERS = {
    "agentic_search": {"question", "answers_block"},
    "context_compression": {"search_history", "question", "answer"},
    "naive_generative_verify": {"question", "answers_block"},
    "agentic_generative_verify": {"question", "answers_block"},
    "agentic_generative_score": {"question", "answer"},
    "judge_label": {"question", "reference", "answer"},
    "judge_pairwise": {"question", "answer_1", "answer_2"},
    "judge_verifiable": {"question"},
    "claim_decompose": {"question", "response"},
    "answer_generate": {"question"},
}

TEMPLATE_IDS = tuple(_CHECKSUMS)


@dataclass(frozen=True)
class PromptTemplate:
    """A named prompt body with a declared placeholder set."""

    id: str
    body: str
    placeholders: frozenset[str]


def _read_asset(template_id: str, asset_dir: str | Path | None) -> str:
    if asset_dir is not None:
        return (Path(asset_dir) / f"{template_id}.txt").read_text(encoding="utf-8")
    ref = resources.files("diva.gateway").joinpath(f"assets/{template_id}.txt")
    return ref.read_text(encoding="utf-8")


def load_template(template_id: str, asset_dir: str | Path | None = None) -> PromptTemplate:
    """Load one template asset, verifying checksum and placeholder set.

    `asset_dir` overrides the packaged assets (used for custom deployments);
    overridden assets are exempt from the drift check since they are the
    operator's own.
    """
    if template_id not in _CHECKSUMS:
        raise KeyError(f"unknown template id {template_id!r}")
    body = _read_asset(template_id, asset_dir)
    if asset_dir is None:
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        if digest != _CHECKSUMS[template_id]:
            raise TemplateDrift(template_id, _CHECKSUMS[template_id], digest)
    found = set(_PLACEHOLDER_RE.findall(body))
    declared = _PLACEHOLDERS[template_id]
    if found != declared:
        raise TemplateDrift(
            template_id,
            f"placeholders {sorted(declared)}",
            f"placeholders {sorted(found)}",
        )
    return PromptTemplate(id=template_id, body=body, placeholders=frozenset(declared))


class TemplateSet:
    """All templates, loaded once and cached."""

    _default: "TemplateSet | None" = None

    def __init__(self, asset_dir: str | Path | None = None):
        self._templates = {tid: load_template(tid, asset_dir) for tid in TEMPLATE_IDS}

    @classmethod
    def default(cls) -> "TemplateSet":
        if cls._default is None:
            cls._default = cls()
        return cls._default

    def __getitem__(self, template_id: str) -> PromptTemplate:
        return self._templates[template_id]

    def render(self, template_id: str, **bindings: str) -> str:
        return render_prompt(self._templates[template_id], bindings)


def render_prompt(template: PromptTemplate, bindings: Mapping[str, str]) -> str:
    """Substitute every placeholder verbatim; strict about the binding set."""
    extra = set(bindings) - template.placeholders
    if extra:
        raise UnknownPlaceholder(extra)
    missing = template.placeholders - set(bindings)
    if missing:
        raise MissingBinding(sorted(missing)[0])
    return _PLACEHOLDER_RE.sub(lambda m: str(bindings[m.group(1)]), template.body)
