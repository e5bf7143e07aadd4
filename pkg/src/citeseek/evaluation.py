"""Set-based precision/recall/F1 over prediction runs, and report rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import AbstractSet, Sequence

from .corpus import Dataset
from .predictor import Prediction, PredictionFailure


@dataclass(frozen=True)
class PerQueryCounts:
    query_id: str
    tp: int
    fp: int
    fn: int
    failed: bool = False

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("counts must be non-negative")


@dataclass(frozen=True)
class EvalReport:
    per_query: tuple[PerQueryCounts, ...]
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    n_queries: int
    n_failed: int


def score_query(
    predicted: AbstractSet[str], gold: AbstractSet[str], query_id: str = ""
) -> PerQueryCounts:
    """Set overlap counts: tp, fp, fn against a non-empty gold set."""
    if not gold:
        raise ValueError("gold set must be non-empty")
    tp = len(predicted & gold)
    return PerQueryCounts(
        query_id=query_id, tp=tp, fp=len(predicted) - tp, fn=len(gold) - tp
    )


def failed_query(query_id: str, gold_size: int) -> PerQueryCounts:
    """Failure accounting: an errored query scores zero and misses all gold."""
    if gold_size < 1:
        raise ValueError("gold set must be non-empty")
    return PerQueryCounts(query_id=query_id, tp=0, fp=0, fn=gold_size, failed=True)


def f1(p: float, r: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if not (0.0 <= p <= 1.0 and 0.0 <= r <= 1.0):
        raise ValueError("precision and recall must lie in [0, 1]")
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def aggregate(counts: Sequence[PerQueryCounts]) -> EvalReport:
    """Micro aggregates from summed counts, macro from per-query averages.

    Micro precision is sum(tp)/sum(tp+fp), micro recall sum(tp)/sum(tp+fn),
    and each F1 is the harmonic mean of its own precision and recall.
    """
    if not counts:
        raise ValueError("no counts to aggregate")
    tp_sum = sum(c.tp for c in counts)
    predicted_sum = sum(c.tp + c.fp for c in counts)
    gold_sum = sum(c.tp + c.fn for c in counts)
    micro_p = tp_sum / predicted_sum if predicted_sum else 0.0
    micro_r = tp_sum / gold_sum if gold_sum else 0.0
    per_p = [c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0 for c in counts]
    per_r = [c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0 for c in counts]
    macro_p = sum(per_p) / len(counts)
    macro_r = sum(per_r) / len(counts)
    return EvalReport(
        per_query=tuple(counts),
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=f1(micro_p, micro_r),
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=f1(macro_p, macro_r),
        n_queries=len(counts),
        n_failed=sum(1 for c in counts if c.failed),
    )


def counts_for_run(
    results: Sequence[Prediction | PredictionFailure], dataset: Dataset
) -> list[PerQueryCounts]:
    """Score a prediction run against the dataset's gold sets, in run order."""
    gold_by_id = {inst.query_id: inst.gold_ids for inst in dataset}
    counts = []
    for result in results:
        gold = gold_by_id[result.query_id]
        if isinstance(result, PredictionFailure):
            counts.append(failed_query(result.query_id, len(gold)))
        else:
            counts.append(
                score_query(result.predicted_ids, gold, query_id=result.query_id)
            )
    return counts


def evaluate_run(
    results: Sequence[Prediction | PredictionFailure], dataset: Dataset
) -> EvalReport:
    return aggregate(counts_for_run(results, dataset))


def _report_dict(report: EvalReport) -> dict:
    return {
        "micro_precision": report.micro_precision,
        "micro_recall": report.micro_recall,
        "micro_f1": report.micro_f1,
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "macro_f1": report.macro_f1,
        "n_queries": report.n_queries,
        "n_failed": report.n_failed,
        "per_query": [
            {
                "query_id": c.query_id,
                "tp": c.tp,
                "fp": c.fp,
                "fn": c.fn,
                "failed": c.failed,
            }
            for c in report.per_query
        ],
    }


def render_report(
    reports: Sequence[tuple[str, EvalReport]], format: str = "table"
) -> str:
    """Render named reports as a text table or a machine-readable object.

    The table shows micro Recall/Precision/F1 to four decimals, one row per
    system in input order; the JSON form carries all aggregates plus the
    per-query counts.
    """
    if format == "table":
        lines = [
            "| System | Recall | Precision | F1 |",
            "|---|---:|---:|---:|",
        ]
        for name, report in reports:
            lines.append(
                f"| {name} | {report.micro_recall:.4f}"
                f" | {report.micro_precision:.4f} | {report.micro_f1:.4f} |"
            )
        return "\n".join(lines) + "\n"
    if format == "json":
        payload = {
            "systems": [
                {"name": name, **_report_dict(report)} for name, report in reports
            ]
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    raise ValueError(f"unknown report format {format!r}")


def parse_report_json(text: str) -> list[tuple[str, EvalReport]]:
    """Rebuild named reports from the machine-readable rendering."""
    payload = json.loads(text)
    reports = []
    for system in payload["systems"]:
        counts = tuple(
            PerQueryCounts(
                query_id=row["query_id"],
                tp=row["tp"],
                fp=row["fp"],
                fn=row["fn"],
                failed=row.get("failed", False),
            )
            for row in system["per_query"]
        )
        reports.append(
            (
                system["name"],
                EvalReport(
                    per_query=counts,
                    micro_precision=system["micro_precision"],
                    micro_recall=system["micro_recall"],
                    micro_f1=system["micro_f1"],
                    macro_precision=system["macro_precision"],
                    macro_recall=system["macro_recall"],
                    macro_f1=system["macro_f1"],
                    n_queries=system["n_queries"],
                    n_failed=system["n_failed"],
                ),
            )
        )
    return reports
