"""Per-class decision threshold tuning and positive-class weight search."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace as dc_replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from ..evaluation import THRESHOLD_GRID
from ..validation import as_binary_matrix, as_probability_matrix
from .config import TrainConfig, derive_seed
from .loop import fit_model


@dataclass
class ThresholdSet:
    """One sigmoid decision threshold per experimental topic."""

    thresholds: dict[str, float]

    def vector(self, topics: Sequence[str]) -> list[float]:
        return [self.thresholds[t] for t in topics]

    def to_json(self) -> dict:
        return dict(self.thresholds)

    @classmethod
    def from_json(cls, payload: dict) -> "ThresholdSet":
        return cls(thresholds={t: float(v) for t, v in payload.items()})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ThresholdSet":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def constant(cls, topics: Sequence[str], value: float = 0.5) -> "ThresholdSet":
        return cls(thresholds={t: value for t in topics})


def tune_thresholds(
    dev_probs,
    dev_gold,
    topics: Sequence[str] | None = None,
    grid: Sequence[float] = THRESHOLD_GRID,
) -> ThresholdSet:
    """Independently pick, per class, the grid threshold with the best dev
    F1; ties go to the lowest threshold."""
    probs = as_probability_matrix(dev_probs, "dev_probs")
    gold = as_binary_matrix(dev_gold, "dev_gold")
    if probs.shape != gold.shape:
        raise ValueError(f"dev_probs {probs.shape} and dev_gold {gold.shape} differ in shape")
    if topics is None:
        topics = [f"c{i}" for i in range(probs.shape[1])]

    chosen: dict[str, float] = {}
    for column, topic in enumerate(topics):
        best_f1 = -1.0
        best_threshold = grid[0]
        for threshold in grid:
            predictions = probs[:, column] >= threshold
            tp = np.sum(predictions & (gold[:, column] == 1))
            fp = np.sum(predictions & (gold[:, column] == 0))
            fn = np.sum(~predictions & (gold[:, column] == 1))
            p = tp / (tp + fp) if tp + fp else 0.0
            r = tp / (tp + fn) if tp + fn else 0.0
            f1 = 2 * p * r / (p + r) if p + r else 0.0
            if f1 > best_f1:
                best_f1 = f1
                best_threshold = threshold
        chosen[topic] = float(best_threshold)
    return ThresholdSet(thresholds=chosen)


def select_pos_weight(
    build_net: Callable[[], torch.nn.Module],
    train_examples: Sequence,
    dev_examples: Sequence,
    target_column: int,
    config: TrainConfig,
    collator,
    candidates: Sequence[float] | None = None,
) -> float:
    """Budgeted search over positive-class weights for one binary topic.

    Each candidate trains a fresh model for ``config.pos_weight_epochs``
    epochs; the weight with the best dev F1 wins, ties keeping the first
    (smallest) candidate.
    """
    if candidates is None:
        candidates = config.pos_weight_candidates
    budgeted = dc_replace(
        config,
        max_epochs=config.pos_weight_epochs,
        patience=None,
        record_init_snapshots=False,
    )
    best_weight = candidates[0]
    best_metric = float("-inf")
    for weight in candidates:
        torch.manual_seed(derive_seed(config.seed, "pos-weight", target_column, weight))
        net = build_net()
        result = fit_model(
            net,
            train_examples,
            dev_examples,
            budgeted,
            collator,
            target_column=target_column,
            pos_weight=float(weight),
        )
        if result.best_metric > best_metric:
            best_metric = result.best_metric
            best_weight = weight
    return float(best_weight)
