"""Dataset-level evaluation: aggregation, report JSON, table rendering.

Reports are deterministic: they echo configuration but never include
wall-clock timing (that lives in the run manifest the CLI writes), so
two identical runs produce byte-identical report files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from ..errors import EmptyDataset
from ..pipelines import BenchItem
from ..runner import run_bounded
from .metrics import RankingMetrics, item_precision_at_1, kendall_tau
from .verifier import VerifierStack, run_verifier

OVERALL = "overall"


@dataclass
class EvalReport:
    mode: str
    per_dataset: dict[str, RankingMetrics]
    overall: RankingMetrics
    config: dict[str, Any] = field(default_factory=dict)
    binary: tuple[float, float] | None = None
    mean_token_f1: float | None = None


@dataclass(frozen=True)
class ItemOutcome:
    item_id: str
    source_dataset: str
    predicted_order: tuple[str, ...]
    p_at_1: float
    tau: float
    tied: bool


def _gold_order(item: BenchItem) -> list[str]:
    return [a.id for a in sorted(item.answers, key=lambda a: a.gold_rank)]


def evaluate_item(item: BenchItem, mode: str, stack: VerifierStack) -> ItemOutcome:
    ranked = run_verifier(mode, item, stack)
    predicted = [r.answer_id for r in ranked]
    gold = _gold_order(item)
    scores = {r.answer_id: r.score for r in ranked}
    return ItemOutcome(
        item_id=item.id,
        source_dataset=item.source_dataset or "default",
        predicted_order=tuple(predicted),
        p_at_1=item_precision_at_1(scores, gold[0]),
        tau=kendall_tau(predicted, gold),
        tied=any(r.tie for r in ranked),
    )


def _aggregate(outcomes: Sequence[ItemOutcome]) -> RankingMetrics:
    n = len(outcomes)
    return RankingMetrics(
        precision_at_1=sum(o.p_at_1 for o in outcomes) / n,
        kendall_tau=sum(o.tau for o in outcomes) / n,
        n_items=n,
        n_ties=sum(1 for o in outcomes if o.tied),
    )


def evaluate_dataset(
    items: Sequence[BenchItem],
    mode: str,
    stack: VerifierStack | Callable[[BenchItem], VerifierStack],
    config_echo: dict[str, Any] | None = None,
    max_workers: int = 1,
) -> EvalReport:
    """Evaluate the accepted items and aggregate per source dataset.

    `stack` may be a factory (item -> VerifierStack) so scripted mock
    backends stay isolated per item.
    """
    accepted = [item for item in items if item.review_status == "accepted"]
    if not accepted:
        raise EmptyDataset("no accepted items to evaluate")

    def work(item: BenchItem) -> ItemOutcome:
        item_stack = stack(item) if callable(stack) else stack
        return evaluate_item(item, mode, item_stack)

    outcomes = run_bounded(work, accepted, max_workers=max_workers)

    by_dataset: dict[str, list[ItemOutcome]] = {}
    for outcome in outcomes:
        by_dataset.setdefault(outcome.source_dataset, []).append(outcome)
    per_dataset = {name: _aggregate(group) for name, group in sorted(by_dataset.items())}
    config = dict(config_echo or {})
    config.setdefault("mode", mode)
    return EvalReport(
        mode=mode,
        per_dataset=per_dataset,
        overall=_aggregate(outcomes),
        config=config,
    )


def _metrics_to_json(m: RankingMetrics) -> dict[str, Any]:
    return {
        "precision_at_1": m.precision_at_1,
        "kendall_tau": m.kendall_tau,
        "n_items": m.n_items,
        "n_ties": m.n_ties,
    }


def _metrics_from_json(obj: dict[str, Any]) -> RankingMetrics:
    return RankingMetrics(
        precision_at_1=obj["precision_at_1"],
        kendall_tau=obj["kendall_tau"],
        n_items=obj["n_items"],
        n_ties=obj["n_ties"],
    )


def report_to_json(report: EvalReport) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "mode": report.mode,
        "per_dataset": {k: _metrics_to_json(v) for k, v in report.per_dataset.items()},
        "overall": _metrics_to_json(report.overall),
        "config": report.config,
    }
    if report.binary is not None:
        obj["binary"] = {"accuracy": report.binary[0], "f1": report.binary[1]}
    if report.mean_token_f1 is not None:
        obj["mean_token_f1"] = report.mean_token_f1
    return obj


def report_from_json(obj: dict[str, Any]) -> EvalReport:
    binary = None
    if "binary" in obj:
        binary = (obj["binary"]["accuracy"], obj["binary"]["f1"])
    return EvalReport(
        mode=obj["mode"],
        per_dataset={k: _metrics_from_json(v) for k, v in obj["per_dataset"].items()},
        overall=_metrics_from_json(obj["overall"]),
        config=obj.get("config", {}),
        binary=binary,
        mean_token_f1=obj.get("mean_token_f1"),
    )


def save_report(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_json(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path: str | Path) -> EvalReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_json(json.load(fh))


def render_table(report: EvalReport) -> str:
    """Plain-text summary table, one row per dataset plus the overall row."""
    sources = report.config.get("sources") or report.config.get("enabled_sources", "")
    if isinstance(sources, (list, tuple)):
        sources = "+".join(sources)
    header = f"mode: {report.mode}"
    if sources:
        header += f"    sources: {sources}"
    rows = [(name, m) for name, m in report.per_dataset.items()]
    rows.append((OVERALL, report.overall))
    name_width = max(len(name) for name, _ in rows) + 2
    lines = [header, ""]
    lines.append(f"{'dataset':<{name_width}}{'items':>6}{'ties':>6}{'P@1':>8}{'K-tau':>8}")
    for name, m in rows:
        lines.append(
            f"{name:<{name_width}}{m.n_items:>6}{m.n_ties:>6}"
            f"{m.precision_at_1:>8.3f}{m.kendall_tau:>8.3f}"
        )
    if report.binary is not None:
        lines.append("")
        lines.append(f"binary: acc={report.binary[0]:.3f} f1={report.binary[1]:.3f}")
    if report.mean_token_f1 is not None:
        lines.append(f"mean token F1: {report.mean_token_f1:.3f}")
    return "\n".join(lines)
