"""Think/Search/Observe loop gathering evidence for a question.

One loop runs per question and is shared by all candidate answers; the
model sees the question plus an answers block and decides which searches
to run. The loop always halts: each assistant reply consumes one turn,
and the budget caps turns regardless of backend behavior.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from ..errors import DivaError, RuntimeFailure, ValidationError
from ..gateway import ChatMessage, LlmBackend, TemplateSet, chat_complete
from ..retrieval import LocalCorpus, SearchResult, WebClient, search_local, search_web
from .types import AgentConfig, AnswerCandidate, Question, Trajectory, TrajectoryStep


@dataclass(frozen=True)
class ToolCall:
    tool: str
    query: str


@dataclass(frozen=True)
class Done:
    pass


@dataclass(frozen=True)
class ThoughtOnly:
    pass


_CALL_RE = re.compile(r"search_(web|local)\s*\(\s*([\"'])(.+?)\2\s*\)", re.DOTALL)


def _extract_calls(reply: str) -> list[ToolCall]:
    return [ToolCall(tool=f"search_{m.group(1)}", query=m.group(3)) for m in _CALL_RE.finditer(reply)]


def parse_agent_reply(
    reply: str, cfg: AgentConfig, warnings: list[str] | None = None
) -> ToolCall | Done | ThoughtOnly:
    """Classify one assistant reply. Total: never raises on model output."""
    if any(sentinel in reply for sentinel in cfg.sentinels):
        return Done()
    calls = _extract_calls(reply)
    if not calls:
        return ThoughtOnly()
    if len(calls) > 1 and cfg.one_query_per_turn and warnings is not None:
        warnings.append(f"reply contained {len(calls)} search calls; only the first was honored")
    return calls[0]


def render_answers_block(candidates: Sequence[AnswerCandidate]) -> str:
    return "\n".join(f"Answer {i}: {c.text}" for i, c in enumerate(candidates, start=1))


def format_observation(tool: str, query: str, results: Sequence[SearchResult], note: str = "") -> str:
    header = f'Observation for {tool}("{query}"):'
    if note:
        return f"{header}\n{note}"
    if not results:
        return f"{header}\nNo results found."
    lines = [header]
    for r in results:
        title = r.title or r.origin_id
        lines.append(f"[{r.rank}] {title}: {r.snippet}")
    return "\n".join(lines)


_NUDGE = (
    "No search call was found in your reply. Emit exactly one "
    'search_web("...") or search_local("...") call, or the ready token '
    "if you have enough information."
)


def run_agentic_search(
    question: Question,
    candidates: Sequence[AnswerCandidate],
    backend: LlmBackend,
    corpus: LocalCorpus | None,
    cfg: AgentConfig,
    templates: TemplateSet | None = None,
    web_client: WebClient | None = None,
) -> Trajectory:
    """Collect evidence for a question shared by all its candidates.

    Backend failures do not raise; the partial trajectory is returned
    with termination="backend_error" and the message preserved.
    """
    if not candidates:
        raise ValidationError("run_agentic_search requires at least one candidate")
    templates = templates or TemplateSet.default()

    prompt = templates.render(
        "agentic_search",
        question=question.text,
        answers_block=render_answers_block(candidates),
    )
    conversation: list[ChatMessage] = [ChatMessage("user", prompt)]
    steps: list[TrajectoryStep] = []
    warnings: list[str] = []
    termination = "budget_exhausted"
    error: str | None = None
    turn = 0

    while turn < cfg.max_turns:
        turn += 1
        try:
            reply = chat_complete(backend, conversation)
        except RuntimeFailure as exc:
            termination = "backend_error"
            error = str(exc)
            turn -= 1
            break
        conversation.append(reply)
        steps.append(TrajectoryStep(kind="thought", text=reply.content))

        action = parse_agent_reply(reply.content, cfg, warnings)
        if isinstance(action, Done):
            termination = "sentinel"
            break

        if isinstance(action, ThoughtOnly):
            conversation.append(ChatMessage("tool", _NUDGE))
            continue

        calls = [action]
        if not cfg.one_query_per_turn:
            calls = _extract_calls(reply.content)
        feedback_parts = []
        for call in calls:
            results, note = _dispatch(call, corpus, cfg, web_client, warnings)
            steps.append(TrajectoryStep(kind="tool_call", tool=call.tool, query=call.query))
            steps.append(TrajectoryStep(kind="observation", results=tuple(results)))
            feedback_parts.append(format_observation(call.tool, call.query, results, note))
        conversation.append(ChatMessage("tool", "\n\n".join(feedback_parts)))

    return Trajectory(
        question_id=question.id,
        steps=steps,
        termination=termination,
        turn_count=turn,
        warnings=warnings,
        error=error,
    )


def _dispatch(
    call: ToolCall,
    corpus: LocalCorpus | None,
    cfg: AgentConfig,
    web_client: WebClient | None,
    warnings: list[str],
) -> tuple[list[SearchResult], str]:
    """Run one search; failures become empty observations, not crashes."""
    try:
        if call.tool == "search_local":
            if corpus is None:
                raise ValidationError("no local corpus configured")
            return search_local(call.query, corpus, cfg.retrieval), ""
        if web_client is None:
            raise ValidationError("no web client configured")
        return search_web(call.query, cfg.retrieval, web_client), ""
    except DivaError as exc:
        warnings.append(f'{call.tool}("{call.query}") failed: {exc}')
        return [], f"Search failed: {exc}"


def render_search_history(traj: Trajectory) -> str:
    """Flatten a trajectory into the transcript shown to the compressor."""
    parts: list[str] = []
    i = 0
    while i < len(traj.steps):
        step = traj.steps[i]
        if step.kind == "thought":
            parts.append(step.text)
            i += 1
        elif step.kind == "tool_call":
            observation = traj.steps[i + 1]
            parts.append(format_observation(step.tool, step.query, observation.results))
            i += 2
        else:
            i += 1
    return "\n\n".join(parts)
