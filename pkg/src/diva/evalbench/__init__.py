"""Evaluation: ranking metrics, verifier modes, dataset reports."""

from .metrics import (
    RankingMetrics,
    binary_eval,
    item_precision_at_1,
    kendall_tau,
    precision_at_1,
    token_f1,
)
from .report import (
    EvalReport,
    ItemOutcome,
    evaluate_dataset,
    evaluate_item,
    load_report,
    render_table,
    report_from_json,
    report_to_json,
    save_report,
)
from .verifier import (
    MODES,
    RETRIEVAL_FREE_MODES,
    LongformResult,
    SelectionResult,
    VerifierStack,
    best_of_n_select,
    decompose_response,
    longform_evaluate,
    parse_ranking_verdict,
    parse_score_verdict,
    run_verifier,
    score_candidates,
)

__all__ = [
    "EvalReport",
    "ItemOutcome",
    "LongformResult",
    "MODES",
    "RETRIEVAL_FREE_MODES",
    "RankingMetrics",
    "SelectionResult",
    "VerifierStack",
    "best_of_n_select",
    "binary_eval",
    "decompose_response",
    "evaluate_dataset",
    "evaluate_item",
    "item_precision_at_1",
    "kendall_tau",
    "load_report",
    "longform_evaluate",
    "parse_ranking_verdict",
    "parse_score_verdict",
    "precision_at_1",
    "render_table",
    "report_from_json",
    "report_to_json",
    "run_verifier",
    "save_report",
    "score_candidates",
    "token_f1",
]
