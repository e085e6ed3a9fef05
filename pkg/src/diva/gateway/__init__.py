"""LLM gateway: prompt templates plus mock and remote chat backends."""

from .messages import (
    ANY,
    ChatMessage,
    ChatParams,
    LlmBackend,
    MockScript,
    TransientTransportError,
    chat_complete,
    mock_backend,
    validate_conversation,
)
from .templates import PromptTemplate, TemplateSet, load_template, render_prompt

__all__ = [
    "ANY",
    "ChatMessage",
    "ChatParams",
    "LlmBackend",
    "MockScript",
    "PromptTemplate",
    "TemplateSet",
    "TransientTransportError",
    "chat_complete",
    "load_template",
    "mock_backend",
    "render_prompt",
    "validate_conversation",
]
