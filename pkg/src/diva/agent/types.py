"""Core data types for the evidence-search loop."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..errors import ValidationError
from ..retrieval import RetrievalConfig, SearchResult

# Both ready tokens seen in the wild are accepted by default.
DEFAULT_SENTINELS = ("READY_FOR_EVALUATION", "READY_FOR_ANSWERING")

TERMINATIONS = ("sentinel", "budget_exhausted", "backend_error")


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    reference: str | None = None
    source_dataset: str | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("question text must be non-empty")


@dataclass(frozen=True)
class AnswerCandidate:
    id: str
    text: str
    gold_rank: int | None = None
    binary_label: str | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("answer text must be non-empty")
        if self.gold_rank is not None and not 1 <= self.gold_rank <= 3:
            raise ValidationError("gold_rank must be in 1..3")
        if self.binary_label is not None and self.binary_label not in ("correct", "incorrect"):
            raise ValidationError(f"unknown binary_label {self.binary_label!r}")


@dataclass(frozen=True)
class TrajectoryStep:
    kind: str  # thought | tool_call | observation
    text: str = ""
    tool: str = ""
    query: str = ""
    results: tuple[SearchResult, ...] = ()

    def __post_init__(self):
        if self.kind not in ("thought", "tool_call", "observation"):
            raise ValidationError(f"unknown step kind {self.kind!r}")
        if self.kind == "thought" and not self.text.strip():
            raise ValidationError("thought text must be non-empty")
        if self.kind == "tool_call" and self.tool not in ("search_web", "search_local"):
            raise ValidationError(f"unknown tool {self.tool!r}")


@dataclass
class Trajectory:
    question_id: str
    steps: list[TrajectoryStep]
    termination: str
    turn_count: int
    warnings: list[str] = field(default_factory=list)
    error: str | None = None

    def __post_init__(self):
        if self.termination not in TERMINATIONS:
            raise ValidationError(f"unknown termination {self.termination!r}")
        validate_steps(self.steps)

    def tool_calls(self) -> list[TrajectoryStep]:
        return [s for s in self.steps if s.kind == "tool_call"]


def validate_steps(steps: Sequence[TrajectoryStep]) -> None:
    """Every tool_call must be immediately followed by exactly one observation."""
    for i, step in enumerate(steps):
        if step.kind == "tool_call":
            if i + 1 >= len(steps) or steps[i + 1].kind != "observation":
                raise ValidationError("tool_call step not followed by an observation")
        if step.kind == "observation":
            if i == 0 or steps[i - 1].kind != "tool_call":
                raise ValidationError("observation step not preceded by a tool_call")


@dataclass(frozen=True)
class AgentConfig:
    max_turns: int = 6
    sentinels: tuple[str, ...] = DEFAULT_SENTINELS
    one_query_per_turn: bool = True
    retrieval: RetrievalConfig = RetrievalConfig()

    def __post_init__(self):
        if self.max_turns < 1:
            raise ValidationError("max_turns must be >= 1")
        sentinels = (self.sentinels,) if isinstance(self.sentinels, str) else tuple(self.sentinels)
        object.__setattr__(self, "sentinels", sentinels)
        if not sentinels or any(not s for s in sentinels):
            raise ValidationError("sentinels must be non-empty strings")


def _result_to_json(r: SearchResult) -> dict[str, Any]:
    return {
        "source": r.source,
        "title": r.title,
        "snippet": r.snippet,
        "rank": r.rank,
        "origin_id": r.origin_id,
    }


def _step_to_json(step: TrajectoryStep) -> dict[str, Any]:
    if step.kind == "thought":
        return {"kind": "thought", "text": step.text}
    if step.kind == "tool_call":
        return {"kind": "tool_call", "tool": step.tool, "query": step.query}
    return {"kind": "observation", "results": [_result_to_json(r) for r in step.results]}


def trajectory_to_json(traj: Trajectory) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "question_id": traj.question_id,
        "termination": traj.termination,
        "steps": [_step_to_json(s) for s in traj.steps],
    }
    if traj.error:
        obj["error"] = traj.error
    return obj


def trajectory_from_json(obj: dict[str, Any]) -> Trajectory:
    steps = []
    for raw in obj["steps"]:
        kind = raw["kind"]
        if kind == "thought":
            steps.append(TrajectoryStep(kind="thought", text=raw["text"]))
        elif kind == "tool_call":
            steps.append(TrajectoryStep(kind="tool_call", tool=raw["tool"], query=raw["query"]))
        elif kind == "observation":
            results = tuple(
                SearchResult(
                    source=r["source"],
                    title=r["title"],
                    snippet=r["snippet"],
                    rank=r["rank"],
                    origin_id=r["origin_id"],
                )
                for r in raw["results"]
            )
            steps.append(TrajectoryStep(kind="observation", results=results))
        else:
            raise ValidationError(f"unknown step kind {kind!r} in serialized trajectory")
    turn_count = sum(1 for s in steps if s.kind == "thought")
    return Trajectory(
        question_id=obj["question_id"],
        steps=steps,
        termination=obj["termination"],
        turn_count=turn_count,
        error=obj.get("error"),
    )


def dump_trajectory(traj: Trajectory) -> str:
    return json.dumps(trajectory_to_json(traj), ensure_ascii=False)


def load_trajectory(line: str) -> Trajectory:
    return trajectory_from_json(json.loads(line))
