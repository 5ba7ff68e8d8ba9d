"""Rebuilding trained models and producing probability matrices."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
import torch

from ..evaluation import compute_metrics
from .checkpoints import Checkpoint
from .config import TrainConfig
from .flat import make_collator
from .loop import predict_keyword_scores, predict_probs


def rebuild_network(
    checkpoint: Checkpoint, adapter=None, embedding_weights=None
) -> torch.nn.Module:
    spec = checkpoint.model_spec
    if spec.encoder.family == "pretrained":
        net = spec.build_pretrained(adapter)
    else:
        net = spec.build(embedding_weights)
    net.load_state_dict(checkpoint.state)
    net.eval()
    return net


def flat_probabilities(
    checkpoint: Checkpoint,
    examples: Sequence,
    config: TrainConfig,
    adapter=None,
    use_keywords: bool | None = None,
) -> np.ndarray:
    net = rebuild_network(checkpoint, adapter)
    collator = make_collator(checkpoint.model_spec.encoder, adapter, config.input_mode)
    return predict_probs(net, examples, collator, config, use_keywords)


def hierarchical_probabilities(
    checkpoints: Mapping[str, Checkpoint],
    topics: Sequence[str],
    examples: Sequence,
    config: TrainConfig,
    adapter=None,
    use_keywords: bool | None = None,
) -> np.ndarray:
    """Assemble the docs-by-topics matrix from per-topic binary models."""
    columns = []
    for topic in topics:
        if topic not in checkpoints:
            raise KeyError(f"missing checkpoint for topic {topic!r}")
        probs = flat_probabilities(checkpoints[topic], examples, config, adapter, use_keywords)
        columns.append(probs[:, 0])
    return np.stack(columns, axis=1)


def keyword_f1(
    checkpoint: Checkpoint,
    examples: Sequence,
    config: TrainConfig,
    adapter=None,
    threshold: float = 0.5,
    use_keywords: bool | None = None,
) -> float:
    """F1 of the keyword-labeling head over real text positions."""
    net = rebuild_network(checkpoint, adapter)
    collator = make_collator(checkpoint.model_spec.encoder, adapter, config.input_mode)
    probs, gold = predict_keyword_scores(net, examples, collator, config, use_keywords)
    preds = (probs >= threshold).astype(np.int8).reshape(-1, 1)
    report = compute_metrics(preds, gold.astype(np.int8).reshape(-1, 1))
    return report.per_class["c0"].f1
