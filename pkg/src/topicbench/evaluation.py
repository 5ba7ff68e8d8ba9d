"""Multi-label metrics, run aggregation and significance testing.

All reported values are percentages. Undefined 0/0 ratios are defined as
zero, the standard convention when rare classes may receive no
predictions. The headline precision/recall columns are macro-averaged
per-class values by default, switchable to micro via ``average``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .validation import as_binary_matrix, as_probability_matrix, check_consistent_shape

THRESHOLD_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass
class PredictionMatrix:
    probabilities: np.ndarray
    predictions: np.ndarray
    thresholds: dict[str, float]
    topics: tuple[str, ...]


@dataclass
class PerClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int

    def to_json(self) -> dict:
        return {"p": self.precision, "r": self.recall, "f1": self.f1, "support": self.support}


@dataclass
class MetricsReport:
    precision: float
    recall: float
    micro_f1: float
    macro_f1: float
    per_class: dict[str, PerClassMetrics]
    runs: list[dict] = field(default_factory=list)
    std: dict[str, float] | None = None
    significance: dict | None = None

    def headline(self) -> dict[str, float]:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
        }

    def to_json(self) -> dict:
        payload = dict(self.headline())
        payload["per_class"] = {t: m.to_json() for t, m in self.per_class.items()}
        if self.runs:
            payload["runs"] = self.runs
        if self.std is not None:
            payload["std"] = self.std
        if self.significance is not None:
            payload["significance"] = self.significance
        return payload

    @classmethod
    def from_json(cls, payload: Mapping) -> "MetricsReport":
        per_class = {
            t: PerClassMetrics(m["p"], m["r"], m["f1"], m["support"])
            for t, m in payload.get("per_class", {}).items()
        }
        return cls(
            precision=payload["precision"],
            recall=payload["recall"],
            micro_f1=payload["micro_f1"],
            macro_f1=payload["macro_f1"],
            per_class=per_class,
            runs=list(payload.get("runs", [])),
            std=payload.get("std"),
            significance=payload.get("significance"),
        )


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(p: float, r: float) -> float:
    return _safe_div(2 * p * r, p + r)


def apply_thresholds(
    probs,
    thresholds: Mapping[str, float] | Sequence[float],
    topics: Sequence[str] | None = None,
    *,
    enforce_closure: bool = False,
    tree=None,
) -> PredictionMatrix:
    """Binarize per-class probabilities at per-class decision thresholds.

    With ``enforce_closure`` a predicted child forces its ancestors on,
    which requires the taxonomy the columns came from. Off by default.
    """
    probs = as_probability_matrix(probs, "probabilities")
    if topics is None:
        if isinstance(thresholds, Mapping):
            topics = list(thresholds)
        else:
            topics = [f"c{i}" for i in range(probs.shape[1])]
    if isinstance(thresholds, Mapping):
        cutoff = np.array([thresholds[t] for t in topics], dtype=np.float64)
        threshold_map = {t: float(thresholds[t]) for t in topics}
    else:
        cutoff = np.asarray(list(thresholds), dtype=np.float64)
        threshold_map = {t: float(v) for t, v in zip(topics, cutoff)}
    if probs.shape[1] != cutoff.shape[0]:
        raise ValueError(
            f"probability matrix has {probs.shape[1]} columns but {cutoff.shape[0]} thresholds given"
        )
    preds = (probs >= cutoff[None, :]).astype(np.int8)

    if enforce_closure:
        if tree is None:
            raise ValueError("enforce_closure requires the taxonomy tree")
        column = {t: i for i, t in enumerate(topics)}
        from .taxonomy import training_order

        for topic in reversed(training_order(tree)):
            parent = tree.node(topic).parent
            if parent != tree.root_id and parent in column:
                child_on = preds[:, column[topic]] == 1
                preds[child_on, column[parent]] = 1

    return PredictionMatrix(
        probabilities=probs,
        predictions=preds,
        thresholds=threshold_map,
        topics=tuple(topics),
    )


def compute_metrics(
    pred, gold, topics: Sequence[str] | None = None, average: str = "macro"
) -> MetricsReport:
    """Micro/macro precision, recall and F1 over a docs-by-topics matrix pair.

    Micro pools true/false positives across all cells; macro averages
    per-class scores uniformly. ``average`` selects which pair fills the
    headline precision/recall columns.
    """
    if isinstance(pred, PredictionMatrix):
        if topics is None:
            topics = pred.topics
        pred = pred.predictions
    pred = as_binary_matrix(pred, "pred")
    gold = as_binary_matrix(gold, "gold")
    check_consistent_shape(pred, gold, "pred/gold")
    if topics is None:
        topics = [f"c{i}" for i in range(gold.shape[1])]
    if len(topics) != gold.shape[1]:
        raise ValueError("topics length must match the number of columns")

    tp = ((pred == 1) & (gold == 1)).sum(axis=0).astype(np.float64)
    fp = ((pred == 1) & (gold == 0)).sum(axis=0).astype(np.float64)
    fn = ((pred == 0) & (gold == 1)).sum(axis=0).astype(np.float64)

    micro_p = _safe_div(tp.sum(), tp.sum() + fp.sum())
    micro_r = _safe_div(tp.sum(), tp.sum() + fn.sum())
    micro_f1 = _f1(micro_p, micro_r)

    per_class = {}
    for i, topic in enumerate(topics):
        p = _safe_div(tp[i], tp[i] + fp[i])
        r = _safe_div(tp[i], tp[i] + fn[i])
        per_class[topic] = PerClassMetrics(
            precision=100.0 * p,
            recall=100.0 * r,
            f1=100.0 * _f1(p, r),
            support=int(tp[i] + fn[i]),
        )

    macro_p = float(np.mean([m.precision for m in per_class.values()])) if per_class else 0.0
    macro_r = float(np.mean([m.recall for m in per_class.values()])) if per_class else 0.0
    macro_f1 = float(np.mean([m.f1 for m in per_class.values()])) if per_class else 0.0

    if average == "macro":
        headline_p, headline_r = macro_p, macro_r
    elif average == "micro":
        headline_p, headline_r = 100.0 * micro_p, 100.0 * micro_r
    else:
        raise ValueError(f"average must be 'macro' or 'micro', got {average!r}")

    return MetricsReport(
        precision=headline_p,
        recall=headline_r,
        micro_f1=100.0 * micro_f1,
        macro_f1=macro_f1,
        per_class=per_class,
    )


def paired_t_test(
    per_class_a: Sequence[float], per_class_b: Sequence[float], alpha: float = 0.05
) -> tuple[float, float, bool]:
    """Paired t statistic over per-class score differences.

    Zero-variance differences degenerate analytically: all-zero means no
    effect (t=0, p=1); a constant nonzero shift is infinitely significant.
    """
    a = np.asarray(per_class_a, dtype=np.float64)
    b = np.asarray(per_class_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be equal-length 1-D sequences")
    if a.size < 2:
        raise ValueError("paired t-test needs at least two pairs")
    diffs = a - b
    if np.allclose(diffs.std(ddof=1), 0.0):
        if np.allclose(diffs.mean(), 0.0):
            return 0.0, 1.0, False
        t = math.inf if diffs.mean() > 0 else -math.inf
        return t, 0.0, True
    result = stats.ttest_rel(a, b)
    t, p = float(result.statistic), float(result.pvalue)
    return t, p, p < alpha


def aggregate_runs(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Mean (and sample standard deviation when n >= 2) across repeated runs."""
    if not reports:
        raise ValueError("need at least one report to aggregate")
    topic_sets = {tuple(sorted(r.per_class)) for r in reports}
    if len(topic_sets) != 1:
        raise ValueError("cannot aggregate reports over different topic sets")

    headline_keys = ("precision", "recall", "micro_f1", "macro_f1")
    values = {k: [getattr(r, k) for r in reports] for k in headline_keys}
    means = {k: float(np.mean(v)) for k, v in values.items()}
    std = (
        {k: float(np.std(v, ddof=1)) for k, v in values.items()}
        if len(reports) >= 2
        else None
    )

    per_class = {}
    for topic in reports[0].per_class:
        per_class[topic] = PerClassMetrics(
            precision=float(np.mean([r.per_class[topic].precision for r in reports])),
            recall=float(np.mean([r.per_class[topic].recall for r in reports])),
            f1=float(np.mean([r.per_class[topic].f1 for r in reports])),
            support=reports[0].per_class[topic].support,
        )

    return MetricsReport(
        precision=means["precision"],
        recall=means["recall"],
        micro_f1=means["micro_f1"],
        macro_f1=means["macro_f1"],
        per_class=per_class,
        runs=[r.headline() for r in reports],
        std=std,
    )
