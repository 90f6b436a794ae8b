"""Study-side machinery: stratified sampling, ground-truth aggregation,
inter-annotator agreement, rule precision/recall and ranking metrics.

Ground truth is the union of annotator choices per diff (a category counts
as present when at least one annotator picked it) over diffs labeled by at
least three distinct annotators; a diff with no categories assigned is a
negative for every category.  Agreement uses nominal Krippendorff alpha on
per-category binary data, tolerant of missing cells.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from typing import Collection, Hashable, Iterable, Mapping, Optional, Sequence

from .rules import Category


@dataclass(frozen=True)
class AnnotationRecord:
    """One human judgment on one diff."""

    diff_id: str
    annotator_id: str
    categories: frozenset[Category]
    none_flag: bool
    comment: Optional[str]
    submitted_at: datetime

    def __post_init__(self) -> None:
        if self.none_flag and self.categories:
            raise ValueError("none_flag excludes category choices")
        if not self.none_flag and not self.categories:
            raise ValueError("either pick categories or set none_flag")


def record_to_json(record: AnnotationRecord) -> dict:
    return {
        "diff_id": record.diff_id,
        "annotator_id": record.annotator_id,
        "categories": sorted(c.value for c in record.categories),
        "none_flag": record.none_flag,
        "comment": record.comment,
        "submitted_at": record.submitted_at.isoformat(),
    }


def record_from_json(obj: dict) -> AnnotationRecord:
    return AnnotationRecord(
        diff_id=obj["diff_id"],
        annotator_id=obj["annotator_id"],
        categories=frozenset(Category(c) for c in obj["categories"]),
        none_flag=obj["none_flag"],
        comment=obj.get("comment"),
        submitted_at=datetime.fromisoformat(obj["submitted_at"]),
    )


# --- stratified sampling -------------------------------------------------------

DEFAULT_QUOTAS: dict[Category, int] = {
    Category.POINT_OF_VIEW: 100,
    Category.CLARIFICATION: 100,
}
DEFAULT_REMAINDER = 800


class StratificationError(Exception):
    def __init__(self, shortfalls: dict[str, tuple[int, int]]):
        parts = ", ".join(f"{name}: wanted {want}, have {have}" for name, (want, have) in shortfalls.items())
        super().__init__(f"stratum shortfall: {parts}")
        self.shortfalls = shortfalls


@dataclass
class SampleResult:
    diff_ids: list[str]
    strata: dict[str, list[str]]
    seed: int


def stratified_sample(
    pool: Mapping[str, Collection[Category]],
    quotas: Optional[Mapping[Category, int]] = None,
    remainder: int = DEFAULT_REMAINDER,
    seed: int = 0,
    *,
    backfill: bool = False,
) -> SampleResult:
    """Quota-first sampling without replacement from a pre-labeled pool.

    Each quota category draws from the diffs the rules labeled with it (and
    that no earlier stratum claimed); the remainder then draws from whatever
    is left.  A stratum with too few candidates raises, or, with ``backfill``
    set, takes what it has and grows the remainder draw instead.
    """
    quotas = dict(DEFAULT_QUOTAS) if quotas is None else dict(quotas)
    rng = random.Random(seed)
    all_ids = sorted(pool)
    chosen: set[str] = set()
    strata: dict[str, list[str]] = {}
    shortfalls: dict[str, tuple[int, int]] = {}
    deficit = 0
    for category in sorted(quotas, key=lambda c: c.value):
        want = quotas[category]
        candidates = [d for d in all_ids if category in pool[d] and d not in chosen]
        if len(candidates) < want:
            if not backfill:
                shortfalls[category.value] = (want, len(candidates))
                continue
            deficit += want - len(candidates)
            picked = list(candidates)
        else:
            picked = sorted(rng.sample(candidates, want))
        strata[category.value] = picked
        chosen.update(picked)
    if shortfalls:
        raise StratificationError(shortfalls)
    want_rest = remainder + deficit
    rest_candidates = [d for d in all_ids if d not in chosen]
    if len(rest_candidates) < want_rest:
        raise StratificationError({"remainder": (want_rest, len(rest_candidates))})
    picked = sorted(rng.sample(rest_candidates, want_rest))
    strata["remainder"] = picked
    chosen.update(picked)
    diff_ids = [d for name in sorted(strata) for d in strata[name]]
    return SampleResult(diff_ids=diff_ids, strata=strata, seed=seed)


# --- ground truth ----------------------------------------------------------------

GroundTruth = dict[str, frozenset[Category]]


def aggregate_ground_truth(
    records: Iterable[AnnotationRecord],
    min_annotators: int = 3,
) -> GroundTruth:
    """Union of annotator labels per diff, over diffs with enough annotators."""
    per_diff: dict[str, dict[str, frozenset[Category]]] = {}
    for rec in records:
        annotators = per_diff.setdefault(rec.diff_id, {})
        if rec.annotator_id in annotators:
            raise ValueError(f"duplicate annotation of {rec.diff_id} by {rec.annotator_id}")
        annotators[rec.annotator_id] = rec.categories
    out: GroundTruth = {}
    for diff_id, annotators in per_diff.items():
        if len(annotators) < min_annotators:
            continue
        union: set[Category] = set()
        for cats in annotators.values():
            union.update(cats)
        out[diff_id] = frozenset(union)
    return out


# --- precision / recall -------------------------------------------------------------


@dataclass(frozen=True)
class CategoryMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]


def _prf(tp: int, fp: int, fn: int, tn: int) -> CategoryMetrics:
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return CategoryMetrics(tp=tp, fp=fp, fn=fn, tn=tn, precision=precision, recall=recall, f1=f1)


def rule_precision_recall(
    verdicts: Mapping[str, Collection[Category]],
    truth: Mapping[str, Collection[Category]],
) -> dict[Category, CategoryMetrics]:
    """Per-category confusion counts of rule labels against ground truth.

    Only diffs present in the ground truth are scored; a diff missing from
    the verdict map counts as unlabeled.  Zero denominators surface as None,
    never as a division error.
    """
    out: dict[Category, CategoryMetrics] = {}
    for category in Category:
        tp = fp = fn = tn = 0
        for diff_id, gt_cats in truth.items():
            predicted = category in verdicts.get(diff_id, ())
            actual = category in gt_cats
            if predicted and actual:
                tp += 1
            elif predicted:
                fp += 1
            elif actual:
                fn += 1
            else:
                tn += 1
        out[category] = _prf(tp, fp, fn, tn)
    return out


# --- Krippendorff alpha ---------------------------------------------------------------


def krippendorff_alpha(matrix: Sequence[Sequence[Optional[Hashable]]]) -> float:
    """Nominal-level alpha over an items-by-annotators matrix with missing cells.

    Uses the coincidence-matrix formulation: each unit with m ratings
    contributes 1/(m-1) per ordered value pair; alpha is
    1 - (n-1) * sum of off-diagonal coincidences / sum of cross products of
    the value marginals.  Items with fewer than two ratings are excluded.
    Degenerate data where every rating is identical has no expected
    disagreement and scores 1.0 by convention.
    """
    units = [[v for v in row if v is not None] for row in matrix]
    units = [u for u in units if len(u) >= 2]
    if len(units) < 2:
        raise ValueError("alpha needs at least 2 items with at least 2 annotations each")
    coincidence: Counter = Counter()
    for unit in units:
        m = len(unit)
        weight = 1.0 / (m - 1)
        for i, a in enumerate(unit):
            for j, b in enumerate(unit):
                if i != j:
                    coincidence[(a, b)] += weight
    marginals: Counter = Counter()
    for (a, _b), v in coincidence.items():
        marginals[a] += v
    n = sum(marginals.values())
    observed_off = sum(v for (a, b), v in coincidence.items() if a != b)
    expected_off = n * n - sum(v * v for v in marginals.values())
    if expected_off <= 0:
        return 1.0
    return 1.0 - (n - 1) * observed_off / expected_off


def category_matrix(
    records: Iterable[AnnotationRecord],
    category: Category,
) -> list[list[Optional[int]]]:
    """Binary items-by-annotators matrix for one category (None = not labeled)."""
    records = list(records)
    diff_ids = sorted({r.diff_id for r in records})
    annotators = sorted({r.annotator_id for r in records})
    cell: dict[tuple[str, str], int] = {}
    for r in records:
        cell[(r.diff_id, r.annotator_id)] = 1 if category in r.categories else 0
    return [[cell.get((d, a)) for a in annotators] for d in diff_ids]


# --- ROC-AUC ------------------------------------------------------------------------------


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability a random positive outranks a random negative, ties half."""
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    n_pos = sum(1 for y in labels if y)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and scores[order[j]] == scores[order[i]]:
            j += 1
        avg_rank = (i + j + 1) / 2  # 1-based average rank of the tie group
        for k in range(i, j):
            ranks[order[k]] = avg_rank
        i = j
    rank_sum_pos = sum(r for r, y in zip(ranks, labels) if y)
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


# --- report -----------------------------------------------------------------------------


def metrics_report(
    records: Iterable[AnnotationRecord],
    verdicts: Mapping[str, Collection[Category]],
    pool_size: int,
    min_annotators: int = 3,
) -> dict:
    """Everything the study tracks, as one JSON-able report."""
    records = list(records)
    truth = aggregate_ground_truth(records, min_annotators=min_annotators)
    labeled_any = len({r.diff_id for r in records})
    alphas: dict[str, Optional[float]] = {}
    for category in Category:
        try:
            alphas[category.value] = krippendorff_alpha(category_matrix(records, category))
        except ValueError:
            alphas[category.value] = None
    prf = rule_precision_recall(verdicts, truth)
    return {
        "coverage": {
            "pool_size": pool_size,
            "labeled_any": labeled_any,
            "labeled_3plus": len(truth),
            "records": len(records),
        },
        "krippendorff_alpha": alphas,
        "rules_vs_ground_truth": {
            cat.value: {
                "tp": m.tp,
                "fp": m.fp,
                "fn": m.fn,
                "tn": m.tn,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
            }
            for cat, m in prf.items()
        },
    }


def format_metrics_table(report: dict) -> str:
    """Human-readable rendering of a metrics report."""

    def fmt(v: Optional[float]) -> str:
        return "   n/a" if v is None else f"{v:6.3f}"

    cov = report["coverage"]
    lines = [
        f"coverage: {cov['labeled_3plus']} of {cov['pool_size']} diffs labeled by >=3 annotators"
        f" ({cov['labeled_any']} touched, {cov['records']} records)",
        f"{'category':<16} {'alpha':>6} {'prec':>6} {'recall':>6} {'f1':>6} {'tp':>5} {'fp':>5} {'fn':>5}",
    ]
    for name, alpha in report["krippendorff_alpha"].items():
        m = report["rules_vs_ground_truth"][name]
        lines.append(
            f"{name:<16} {fmt(alpha)} {fmt(m['precision'])} {fmt(m['recall'])} {fmt(m['f1'])}"
            f" {m['tp']:>5} {m['fp']:>5} {m['fn']:>5}"
        )
    return "\n".join(lines)
