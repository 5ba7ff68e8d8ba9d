"""Single-model training loop with early stopping on a dev metric.

One trainer owns one model's parameters. The loop is deterministic under
the config seed: parameter init is seeded by the caller, batch order comes
from a dedicated RNG, and no other randomness is consumed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import torch

from ..evaluation import apply_thresholds, compute_metrics
from ..models import bce_loss, combined_loss
from .config import TrainConfig, derive_seed


class ClassicalCollator:
    """Pads encoded examples into id/mask/label tensors.

    ``text_mask`` selects real title+abstract positions, the only ones the
    keyword loss may see.
    """

    def __init__(self, pad_index: int = 0, input_mode: str = "text-plus-keywords"):
        self.pad_index = pad_index
        self.input_mode = input_mode

    def __call__(self, examples: Sequence, use_keywords: bool = True) -> dict:
        seqs = [ex.inputs_for(self.input_mode, use_keywords) for ex in examples]
        lengths = [len(s) for s in seqs]
        if min(lengths) == 0:
            empty = examples[lengths.index(0)].id
            raise ValueError(f"example {empty!r} has no input tokens for this input mode")
        width = max(lengths)
        tokens = torch.full((len(seqs), width), self.pad_index, dtype=torch.long)
        mask = torch.zeros(len(seqs), width, dtype=torch.bool)
        text_mask = torch.zeros(len(seqs), width, dtype=torch.bool)
        z = torch.zeros(len(seqs), width, dtype=torch.float32)
        keywords_only = self.input_mode == "keywords-only"
        for i, (seq, ex) in enumerate(zip(seqs, examples)):
            tokens[i, : len(seq)] = torch.tensor(seq, dtype=torch.long)
            mask[i, : len(seq)] = True
            n_text = 0 if keywords_only else min(ex.text_len, len(seq))
            text_mask[i, :n_text] = True
            if n_text:
                z[i, :n_text] = torch.from_numpy(np.asarray(ex.z[:n_text], dtype=np.float32))
        y = torch.from_numpy(np.stack([ex.y for ex in examples]).astype(np.float32))
        return {"tokens": tokens, "mask": mask, "text_mask": text_mask, "z": z, "y": y}


class AdapterCollator:
    """Subword tokenization and padding for pretrained-adapter examples.

    Word-level keyword labels are propagated to all subwords of a word;
    special tokens and keyword-segment words are excluded from the keyword
    loss via ``text_mask``.
    """

    def __init__(self, adapter, input_mode: str = "text-plus-keywords"):
        self.adapter = adapter
        self.input_mode = input_mode

    def __call__(self, examples: Sequence, use_keywords: bool = True) -> dict:
        tokenized = []
        for ex in examples:
            words = ex.inputs_for(self.input_mode, use_keywords)
            if not words:
                raise ValueError(f"example {ex.id!r} has no input words for this input mode")
            ids, word_ids = self.adapter.tokenize_words(words)
            tokenized.append((ids, word_ids, ex))
        width = max(len(ids) for ids, _, _ in tokenized)
        pad = self.adapter.pad_id
        tokens = torch.full((len(tokenized), width), pad, dtype=torch.long)
        mask = torch.zeros(len(tokenized), width, dtype=torch.bool)
        text_mask = torch.zeros(len(tokenized), width, dtype=torch.bool)
        z = torch.zeros(len(tokenized), width, dtype=torch.float32)
        keywords_only = self.input_mode == "keywords-only"
        for i, (ids, word_ids, ex) in enumerate(tokenized):
            tokens[i, : len(ids)] = torch.tensor(ids, dtype=torch.long)
            mask[i, : len(ids)] = True
            n_text_words = 0 if keywords_only else len(ex.words)
            for pos, word_index in enumerate(word_ids):
                if word_index is not None and word_index < n_text_words:
                    text_mask[i, pos] = True
                    z[i, pos] = float(ex.z[word_index])
        y = torch.from_numpy(np.stack([ex.y for ex in examples]).astype(np.float32))
        return {"tokens": tokens, "mask": mask, "text_mask": text_mask, "z": z, "y": y}


@dataclass
class FitResult:
    state: dict[str, torch.Tensor]
    best_epoch: int
    best_metric: float
    history: list[dict] = field(default_factory=list)
    init_state: dict[str, torch.Tensor] | None = None


def clone_state(net: torch.nn.Module) -> dict[str, torch.Tensor]:
    return {name: tensor.detach().clone() for name, tensor in net.state_dict().items()}


def default_monitor(target_column: int | None) -> Callable[[np.ndarray, np.ndarray], float]:
    """Dev metric monitored for early stopping: macro-F1 at threshold 0.5
    for flat models, the topic's own F1 at 0.5 for binary models."""

    def monitor(dev_probs: np.ndarray, dev_gold: np.ndarray) -> float:
        preds = apply_thresholds(dev_probs, [0.5] * dev_probs.shape[1])
        report = compute_metrics(preds.predictions, dev_gold)
        if target_column is None:
            return report.macro_f1
        return report.per_class["c0"].f1

    return monitor


def fit_model(
    net: torch.nn.Module,
    train_examples: Sequence,
    dev_examples: Sequence,
    config: TrainConfig,
    collator,
    *,
    target_column: int | None = None,
    pos_weight: float | None = None,
    monitor: Callable[[np.ndarray, np.ndarray], float] | None = None,
) -> FitResult:
    """Adam training with best-dev checkpointing and optional patience.

    ``target_column`` selects one-vs-all binary training against that
    label column; None trains the full multi-label head.
    """
    if not train_examples:
        raise ValueError("training split is empty")
    if pos_weight is None:
        pos_weight = config.pos_weight
    monitor = monitor or default_monitor(target_column)

    init_state = clone_state(net) if config.record_init_snapshots else None
    best_state = clone_state(net)
    best_epoch = 0
    best_metric = float("-inf")
    history: list[dict] = []

    dev_gold = _targets(dev_examples, target_column)
    optimizer = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    order_rng = random.Random(derive_seed(config.seed, "batch-order", target_column))
    indices = list(range(len(train_examples)))

    for epoch in range(1, config.max_epochs + 1):
        net.train()
        order_rng.shuffle(indices)
        losses = []
        for start in range(0, len(indices), config.batch_size):
            chosen = [train_examples[i] for i in indices[start : start + config.batch_size]]
            batch = collator(chosen, use_keywords=True)
            optimizer.zero_grad()
            loss = _batch_loss(net, batch, config, target_column, pos_weight)
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))

        record = {"epoch": epoch, "train_loss": float(np.mean(losses))}
        if dev_examples:
            probs = predict_probs(net, dev_examples, collator, config)
            metric = monitor(probs, dev_gold)
            record["dev_metric"] = metric
            if metric > best_metric:
                best_metric = metric
                best_epoch = epoch
                best_state = clone_state(net)
        else:
            best_epoch = epoch
            best_state = clone_state(net)
        history.append(record)

        if (
            dev_examples
            and config.patience is not None
            and epoch - best_epoch >= config.patience
        ):
            break

    return FitResult(
        state=best_state,
        best_epoch=best_epoch,
        best_metric=best_metric if best_metric > float("-inf") else float("nan"),
        history=history,
        init_state=init_state,
    )


def _targets(examples: Sequence, target_column: int | None) -> np.ndarray:
    if not examples:
        return np.zeros((0, 1), dtype=np.int8)
    y = np.stack([ex.y for ex in examples])
    if target_column is not None:
        y = y[:, target_column : target_column + 1]
    return y


def _batch_loss(net, batch, config: TrainConfig, target_column: int | None, pos_weight: float):
    topic_probs, keyword_probs = net(batch["tokens"], batch["mask"])
    targets = batch["y"]
    if target_column is not None:
        targets = targets[:, target_column : target_column + 1]
    topic_loss = bce_loss(topic_probs, targets, pos_weight)
    if not config.multitask:
        return topic_loss
    selected = batch["text_mask"]
    if not bool(selected.any()):
        raise ValueError("multi-task training needs keyword labels over text tokens")
    keyword_loss = bce_loss(keyword_probs[selected], batch["z"][selected])
    return combined_loss(topic_loss, keyword_loss, config.loss_weights)


def predict_probs(
    net: torch.nn.Module,
    examples: Sequence,
    collator,
    config: TrainConfig,
    use_keywords: bool | None = None,
) -> np.ndarray:
    """Topic probabilities (docs x outputs) in eval mode.

    ``use_keywords`` defaults to the config's keywords-at-test flag, which
    is how keywords-at-training-only inference drops the keyword segment.
    """
    if use_keywords is None:
        use_keywords = config.keywords_at_test
    net.eval()
    chunks = []
    with torch.no_grad():
        for start in range(0, len(examples), config.batch_size):
            batch = collator(examples[start : start + config.batch_size], use_keywords=use_keywords)
            topic_probs, _ = net(batch["tokens"], batch["mask"])
            chunks.append(topic_probs.numpy())
    if not chunks:
        return np.zeros((0, 1))
    return np.concatenate(chunks, axis=0)


def predict_keyword_scores(
    net: torch.nn.Module,
    examples: Sequence,
    collator,
    config: TrainConfig,
    use_keywords: bool | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Flattened (probabilities, gold labels) over real text positions."""
    if use_keywords is None:
        use_keywords = config.keywords_at_test
    net.eval()
    probs, gold = [], []
    with torch.no_grad():
        for start in range(0, len(examples), config.batch_size):
            batch = collator(examples[start : start + config.batch_size], use_keywords=use_keywords)
            _, keyword_probs = net(batch["tokens"], batch["mask"])
            if keyword_probs is None:
                raise ValueError("model has no keyword head")
            selected = batch["text_mask"]
            probs.append(keyword_probs[selected].numpy())
            gold.append(batch["z"][selected].numpy())
    return np.concatenate(probs), np.concatenate(gold)
