"""Evidence-gathering agent: Think/Search/Observe loop and its data types."""

from .loop import (
    Done,
    ThoughtOnly,
    ToolCall,
    format_observation,
    parse_agent_reply,
    render_answers_block,
    render_search_history,
    run_agentic_search,
)
from .types import (
    DEFAULT_SENTINELS,
    AgentConfig,
    AnswerCandidate,
    Question,
    Trajectory,
    TrajectoryStep,
    dump_trajectory,
    load_trajectory,
    trajectory_from_json,
    trajectory_to_json,
    validate_steps,
)

__all__ = [
    "AgentConfig",
    "AnswerCandidate",
    "DEFAULT_SENTINELS",
    "Done",
    "Question",
    "ThoughtOnly",
    "ToolCall",
    "Trajectory",
    "TrajectoryStep",
    "dump_trajectory",
    "format_observation",
    "load_trajectory",
    "parse_agent_reply",
    "render_answers_block",
    "render_search_history",
    "run_agentic_search",
    "trajectory_from_json",
    "trajectory_to_json",
    "validate_steps",
]
