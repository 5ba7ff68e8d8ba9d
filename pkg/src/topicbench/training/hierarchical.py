"""One-vs-all binary training over the taxonomy with parent initialization.

Topics train in parent-before-child order. A child's parameters start from
its parent's final checkpoint; level-1 topics start from the base encoder
(fresh seeded parameters for classical families, released weights for
pretrained ones). The n-binary ablation is the same trainer with parent
initialization switched off.
"""

from __future__ import annotations

from typing import Mapping

import torch

from ..corpus.records import DatasetSplit
from ..encoders import EncoderConfig
from ..models import HIERARCHICAL_HIDDEN, ModelSpec
from ..taxonomy import TaxonomyTree, training_order
from .checkpoints import Checkpoint, save_checkpoint
from .config import TrainConfig, derive_seed, max_len_for_mode
from .flat import make_collator
from .loop import clone_state, fit_model
from .selection import select_pos_weight


def build_binary_spec(
    config: TrainConfig, encoder: EncoderConfig, vocab=None
) -> ModelSpec:
    classical = encoder.family != "pretrained"
    return ModelSpec(
        encoder=encoder,
        n_outputs=1,
        head_hidden=HIERARCHICAL_HIDDEN if classical else None,
        multitask=config.multitask,
        vocab_size=len(vocab) if (classical and vocab is not None) else 0,
        max_len=max_len_for_mode(config.input_mode),
    )


def _require_parent(checkpoints: Mapping[str, Checkpoint], topic: str, parent: str) -> Checkpoint:
    if parent not in checkpoints:
        raise RuntimeError(
            f"scheduler bug: topic {topic!r} started before parent {parent!r} had a checkpoint"
        )
    return checkpoints[parent]


def train_hierarchical(
    data: DatasetSplit,
    tree: TaxonomyTree,
    config: TrainConfig,
    *,
    encoder: EncoderConfig | None = None,
    vocab=None,
    adapter=None,
    embedding_weights=None,
    parent_init: bool = True,
    run_dir=None,
    seed_for_files: int | None = None,
) -> dict[str, Checkpoint]:
    """Train one binary classifier per topic; returns topic -> checkpoint.

    Label columns follow ``training_order(tree)``, which must match how the
    examples were encoded. When ``run_dir`` is given, each checkpoint is
    persisted as soon as it is final so children only ever read durable
    parents.
    """
    if not data.train:
        raise ValueError("training split is empty")
    encoder = encoder or EncoderConfig()
    classical = encoder.family != "pretrained"
    order = training_order(tree)
    column = {topic: i for i, topic in enumerate(order)}
    if len(order) != len(data.train[0].y):
        raise ValueError(
            f"tree has {len(order)} topics but examples carry {len(data.train[0].y)} label columns"
        )
    spec = build_binary_spec(config, encoder, vocab)
    collator = make_collator(encoder, adapter, config.input_mode)
    vocab_hash = vocab.content_hash() if vocab is not None else None

    def build_net():
        if encoder.family == "pretrained":
            return spec.build_pretrained(adapter)
        return spec.build(embedding_weights)

    checkpoints: dict[str, Checkpoint] = {}
    for topic in order:
        parent = tree.node(topic).parent
        torch.manual_seed(derive_seed(config.seed, "topic-init", topic))
        net = build_net()

        initialized_from = None
        if parent_init and parent != tree.root_id:
            parent_ckpt = _require_parent(checkpoints, topic, parent)
            net.load_state_dict(parent_ckpt.state)
            initialized_from = parent

        pos_weight = config.pos_weight
        if config.pos_weight_search and classical:
            # candidates train throwaway fresh models; net keeps its start state
            pos_weight = select_pos_weight(
                build_net, data.train, data.dev, column[topic], config, collator
            )

        init_state = clone_state(net) if config.record_init_snapshots else None
        result = fit_model(
            net,
            data.train,
            data.dev,
            config,
            collator,
            target_column=column[topic],
            pos_weight=pos_weight,
        )
        if init_state is not None:
            result.init_state = init_state

        checkpoint = Checkpoint(
            state=result.state,
            model_spec=spec,
            vocab_hash=vocab_hash,
            provenance={
                "target": topic,
                "parent": initialized_from,
                "epoch": result.best_epoch,
                "dev_metric": result.best_metric,
                "pos_weight": pos_weight,
            },
            init_state=result.init_state,
            history=result.history,
        )
        checkpoints[topic] = checkpoint
        if run_dir is not None:
            save_checkpoint(
                checkpoint,
                run_dir.checkpoint_path(seed_for_files if seed_for_files is not None else config.seed, topic),
            )
    return checkpoints


def train_n_binary(
    data: DatasetSplit, tree: TaxonomyTree, config: TrainConfig, **kwargs
) -> dict[str, Checkpoint]:
    """Ablation: identical per-topic binary training but every topic starts
    from the base encoder instead of its parent's checkpoint."""
    kwargs["parent_init"] = False
    return train_hierarchical(data, tree, config, **kwargs)
