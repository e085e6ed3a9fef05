"""Verifier execution plans: the full pipeline and its baselines.

Five modes share one entry point. Score-based modes (diva,
discriminative_naive, agentic_generative_scorer) produce real-valued
scores; ranking modes (generative_naive, agentic_generative_verifier)
emit a verdict permutation that is converted to pseudo-scores k..1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from ..agent import (
    AgentConfig,
    AnswerCandidate,
    Question,
    Trajectory,
    render_answers_block,
    render_search_history,
    run_agentic_search,
)
from ..compress import compress, render_scorer_input_parts
from ..errors import (
    BackendError,
    DecompositionEmpty,
    ValidationError,
    VerdictParseError,
)
from ..gateway import ChatMessage, LlmBackend, TemplateSet, chat_complete
from ..pipelines import BenchItem
from ..retrieval import LocalCorpus, WebClient
from ..scorer import (
    Featurizer,
    RankedAnswer,
    RemoteScorer,
    ScorerHead,
    extract_features,
    predict_score,
    rank_scored,
)

MODES = (
    "diva",
    "generative_naive",
    "agentic_generative_verifier",
    "agentic_generative_scorer",
    "discriminative_naive",
)

# Modes that never touch retrieval.
RETRIEVAL_FREE_MODES = ("generative_naive", "discriminative_naive")


@dataclass
class VerifierStack:
    """Everything a verifier mode might need; modes use subsets."""

    search_backend: LlmBackend | None = None
    compress_backend: LlmBackend | None = None
    verify_backend: LlmBackend | None = None
    head: ScorerHead | None = None
    featurizer: Featurizer | None = None
    remote_scorer: RemoteScorer | None = None
    corpus: LocalCorpus | None = None
    web_client: WebClient | None = None
    agent_cfg: AgentConfig = field(default_factory=AgentConfig)
    templates: TemplateSet | None = None
    max_len: int = 1024

    def template_set(self) -> TemplateSet:
        return self.templates or TemplateSet.default()

    def score(self, question: str, answer: str, facts: Sequence[str], reasoning: str) -> float:
        if self.remote_scorer is not None:
            return self.remote_scorer.score(question, answer, facts, reasoning)
        if self.head is None or self.featurizer is None:
            raise ValidationError("score-based mode requires a head+featurizer or remote scorer")
        text = render_scorer_input_parts(question, answer, facts, reasoning, self.max_len)
        return predict_score(self.head, extract_features(text, self.featurizer))


_VERDICT_RE = re.compile(r"<verdict>\s*(.*?)\s*</verdict>", re.DOTALL)


def parse_ranking_verdict(reply: str, k: int) -> list[str]:
    """Extract "AnswerX > AnswerY > ..." as an id list, best first."""
    m = _VERDICT_RE.search(reply)
    if m is None:
        raise VerdictParseError("no <verdict> block found", reply)
    tokens = [t.strip() for t in m.group(1).split(">")]
    expected = {f"Answer{i}" for i in range(1, k + 1)}
    if len(tokens) != k or set(tokens) != expected:
        raise VerdictParseError(
            f"verdict is not a permutation of {sorted(expected)}: {m.group(1)!r}", reply
        )
    return tokens


def parse_score_verdict(reply: str) -> float:
    """Extract a 1-10 score from the <verdict> block."""
    m = _VERDICT_RE.search(reply)
    if m is None:
        raise VerdictParseError("no <verdict> block found", reply)
    body = m.group(1).strip()
    try:
        value = float(body)
    except ValueError:
        raise VerdictParseError(f"verdict is not a number: {body!r}", reply) from None
    if not 1.0 <= value <= 10.0:
        raise VerdictParseError(f"score {value} outside the 1-10 scale", reply)
    return value


def _item_question(item: BenchItem) -> Question:
    return Question(
        id=item.id,
        text=item.question,
        reference=item.reference or None,
        source_dataset=item.source_dataset or None,
    )


def _search(
    question: Question, candidates: Sequence[AnswerCandidate], stack: VerifierStack
) -> Trajectory:
    if stack.search_backend is None:
        raise ValidationError("this mode requires a search backend")
    traj = run_agentic_search(
        question,
        list(candidates),
        stack.search_backend,
        stack.corpus,
        stack.agent_cfg,
        stack.template_set(),
        stack.web_client,
    )
    if traj.termination == "backend_error":
        raise BackendError(f"search failed for question {question.id!r}: {traj.error}")
    return traj


def _ranking_from_verdict(order: list[str]) -> list[RankedAnswer]:
    k = len(order)
    return [
        RankedAnswer(answer_id=aid, score=float(k - i), tie=False) for i, aid in enumerate(order)
    ]


def score_candidates(
    question: Question,
    candidates: Sequence[AnswerCandidate],
    stack: VerifierStack,
    mode: str,
) -> list[RankedAnswer]:
    """Produce per-answer scores for the score-based modes."""
    if mode == "discriminative_naive":
        scored = [
            (a.id, stack.score(question.text, a.text, [], "")) for a in candidates
        ]
        return rank_scored(scored)

    if mode == "diva":
        if stack.compress_backend is None:
            raise ValidationError("diva mode requires a compression backend")
        traj = _search(question, candidates, stack)
        scored = []
        for answer in candidates:
            ct = compress(traj, question, answer, stack.compress_backend, stack.template_set())
            scored.append(
                (answer.id, stack.score(question.text, answer.text, ct.useful_facts, ct.reasoning))
            )
        return rank_scored(scored)

    if mode == "agentic_generative_scorer":
        if stack.verify_backend is None:
            raise ValidationError("agentic_generative_scorer requires a verify backend")
        traj = _search(question, candidates, stack)
        history = render_search_history(traj)
        templates = stack.template_set()
        scored = []
        for answer in candidates:
            prompt = templates.render(
                "agentic_generative_score", question=question.text, answer=answer.text
            )
            reply = chat_complete(
                stack.verify_backend, [ChatMessage("user", f"{history}\n\n{prompt}")]
            )
            scored.append((answer.id, parse_score_verdict(reply.content)))
        return rank_scored(scored)

    raise ValidationError(f"{mode!r} is not a score-based mode")


def run_verifier(mode: str, item: BenchItem, stack: VerifierStack) -> list[RankedAnswer]:
    """Rank one benchmark item's answers under the given mode."""
    if mode not in MODES:
        raise ValidationError(f"unknown verifier mode {mode!r}")
    question = _item_question(item)
    candidates = list(item.answers)

    if mode in ("diva", "discriminative_naive", "agentic_generative_scorer"):
        return score_candidates(question, candidates, stack, mode)

    if stack.verify_backend is None:
        raise ValidationError(f"{mode} requires a verify backend")
    templates = stack.template_set()
    answers_block = render_answers_block(candidates)

    if mode == "generative_naive":
        prompt = templates.render(
            "naive_generative_verify", question=question.text, answers_block=answers_block
        )
        reply = chat_complete(stack.verify_backend, [ChatMessage("user", prompt)])
        return _ranking_from_verdict(parse_ranking_verdict(reply.content, len(candidates)))

    # agentic_generative_verifier: search first, then rank over the history
    traj = _search(question, candidates, stack)
    history = render_search_history(traj)
    prompt = templates.render(
        "agentic_generative_verify", question=question.text, answers_block=answers_block
    )
    reply = chat_complete(stack.verify_backend, [ChatMessage("user", f"{history}\n\n{prompt}")])
    return _ranking_from_verdict(parse_ranking_verdict(reply.content, len(candidates)))


@dataclass(frozen=True)
class SelectionResult:
    selected_id: str
    selected_text: str
    ranked: tuple[RankedAnswer, ...]
    token_f1: float | None = None


def best_of_n_select(
    question: Question,
    candidates: Sequence[AnswerCandidate],
    stack: VerifierStack,
    mode: str = "diva",
    gold: str | None = None,
) -> SelectionResult:
    """Score all candidates, pick the argmax under the standard tie policy."""
    if len(candidates) < 2:
        raise ValidationError("best_of_n_select requires at least 2 candidates")
    ranked = score_candidates(question, candidates, stack, mode)
    by_id = {a.id: a.text for a in candidates}
    top = ranked[0]
    f1 = None
    if gold is not None:
        from .metrics import token_f1 as _token_f1

        f1 = _token_f1(by_id[top.answer_id], gold)
    return SelectionResult(
        selected_id=top.answer_id,
        selected_text=by_id[top.answer_id],
        ranked=tuple(ranked),
        token_f1=f1,
    )


def decompose_response(
    question: Question,
    response_id: str,
    response: str,
    backend: LlmBackend,
    templates: TemplateSet | None = None,
) -> list[str]:
    """Split a long response into atomic claims ("- " bullets, one per line)."""
    templates = templates or TemplateSet.default()
    prompt = templates.render("claim_decompose", question=question.text, response=response)
    reply = chat_complete(backend, [ChatMessage("user", prompt)])
    claims = [
        line.strip()[2:].strip()
        for line in reply.content.splitlines()
        if line.strip().startswith("- ")
    ]
    claims = [c for c in claims if c]
    if not claims:
        raise DecompositionEmpty(response_id)
    return claims


@dataclass(frozen=True)
class LongformResult:
    response_scores: dict[str, float]
    claim_scores: dict[str, tuple[float, ...]]
    ranking: tuple[RankedAnswer, ...]
    empty_responses: tuple[str, ...]
    kendall_tau: float | None = None
    precision_at_1: float | None = None


def longform_evaluate(
    question: Question,
    responses: Sequence[tuple[str, str]],
    stack: VerifierStack,
    mode: str = "diva",
    gold_order: Sequence[str] | None = None,
) -> LongformResult:
    """Decompose each (id, text) response into claims and score claim-wise.

    A response's score is the mean of its claim scores; a response with
    zero claims scores 0.0 and is flagged rather than aborting the run.
    """
    if not responses:
        raise ValidationError("longform_evaluate requires at least one response")
    if stack.verify_backend is None:
        raise ValidationError("longform_evaluate needs a verify backend for decomposition")

    response_scores: dict[str, float] = {}
    claim_scores: dict[str, tuple[float, ...]] = {}
    empty: list[str] = []
    for response_id, text in responses:
        try:
            claims = decompose_response(
                question, response_id, text, stack.verify_backend, stack.templates
            )
        except DecompositionEmpty:
            empty.append(response_id)
            response_scores[response_id] = 0.0
            claim_scores[response_id] = ()
            continue
        candidates = [
            AnswerCandidate(id=f"{response_id}.c{i:03d}", text=claim)
            for i, claim in enumerate(claims, start=1)
        ]
        ranked = score_candidates(question, candidates, stack, mode)
        scores = tuple(r.score for r in sorted(ranked, key=lambda r: r.answer_id))
        claim_scores[response_id] = scores
        response_scores[response_id] = sum(scores) / len(scores)

    ranking = tuple(rank_scored(list(response_scores.items())))
    tau = None
    p1 = None
    if gold_order is not None:
        from .metrics import item_precision_at_1, kendall_tau as _tau

        predicted_order = [r.answer_id for r in ranking]
        tau = _tau(predicted_order, list(gold_order))
        p1 = item_precision_at_1(response_scores, gold_order[0])
    return LongformResult(
        response_scores=response_scores,
        claim_scores=claim_scores,
        ranking=ranking,
        empty_responses=tuple(empty),
        kendall_tau=tau,
        precision_at_1=p1,
    )
