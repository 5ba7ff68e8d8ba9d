"""Flat multi-label training: one shared model, n sigmoid outputs."""

from __future__ import annotations

import torch

from ..corpus.records import DatasetSplit
from ..encoders import EncoderConfig
from ..models import FLAT_HIDDEN, ModelSpec
from .checkpoints import Checkpoint
from .config import TrainConfig, derive_seed, max_len_for_mode
from .loop import AdapterCollator, ClassicalCollator, fit_model


def build_flat_spec(
    data: DatasetSplit,
    config: TrainConfig,
    encoder: EncoderConfig,
    vocab=None,
) -> ModelSpec:
    n_outputs = len(data.train[0].y)
    classical = encoder.family != "pretrained"
    return ModelSpec(
        encoder=encoder,
        n_outputs=n_outputs,
        head_hidden=FLAT_HIDDEN if classical else None,
        multitask=config.multitask,
        vocab_size=len(vocab) if (classical and vocab is not None) else 0,
        max_len=max_len_for_mode(config.input_mode),
    )


def make_collator(encoder: EncoderConfig, adapter=None, input_mode: str = "text-plus-keywords"):
    if encoder.family == "pretrained":
        if adapter is None:
            raise ValueError("pretrained encoder family needs an adapter")
        return AdapterCollator(adapter, input_mode)
    return ClassicalCollator(input_mode=input_mode)


def train_flat(
    data: DatasetSplit,
    config: TrainConfig,
    *,
    encoder: EncoderConfig | None = None,
    vocab=None,
    adapter=None,
    embedding_weights=None,
) -> Checkpoint:
    """Train one model over all topics jointly; returns the best-dev
    checkpoint (the initialized model when max_epochs is zero)."""
    if not data.train:
        raise ValueError("training split is empty")
    encoder = encoder or EncoderConfig()
    spec = build_flat_spec(data, config, encoder, vocab)
    collator = make_collator(encoder, adapter, config.input_mode)

    torch.manual_seed(derive_seed(config.seed, "flat-init"))
    if encoder.family == "pretrained":
        net = spec.build_pretrained(adapter)
    else:
        net = spec.build(embedding_weights)

    result = fit_model(net, data.train, data.dev, config, collator)
    return Checkpoint(
        state=result.state,
        model_spec=spec,
        vocab_hash=vocab.content_hash() if vocab is not None else None,
        provenance={
            "target": "flat",
            "parent": None,
            "epoch": result.best_epoch,
            "dev_metric": result.best_metric,
        },
        init_state=result.init_state,
        history=result.history,
    )


def train_multitask(data: DatasetSplit, config: TrainConfig, **kwargs) -> Checkpoint:
    """Joint topic classification + keyword labeling under the combined loss.

    Requires keyword labels over text tokens, so keywords-only input is
    rejected up front.
    """
    if config.input_mode == "keywords-only":
        raise ValueError("multi-task keyword labeling is undefined for keywords-only input")
    if not config.multitask:
        config = config.with_overrides(multitask=True)
    missing = [ex.id for ex in data.train[:50] if len(ex.z) != _text_len(ex)]
    if missing:
        raise ValueError(f"examples missing keyword labels: {missing[:3]}")
    return train_flat(data, config, **kwargs)


def _text_len(example) -> int:
    return example.text_len if hasattr(example, "text_len") else len(example.words)
