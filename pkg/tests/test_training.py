import numpy as np
import pytest
import torch

from topicbench.corpus.records import DatasetSplit
from topicbench.encoders import EncoderConfig
from topicbench.evaluation import THRESHOLD_GRID, apply_thresholds, compute_metrics
from topicbench.models import LossWeights, ModelSpec
from topicbench.taxonomy import load_taxonomy, training_order
from topicbench.training import (
    ClassicalCollator,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    select_pos_weight,
    train_flat,
    train_hierarchical,
    train_multitask,
    train_n_binary,
    tune_thresholds,
)
from topicbench.training.flat import make_collator
from topicbench.training.hierarchical import _require_parent, build_binary_spec
from topicbench.training.inference import (
    flat_probabilities,
    hierarchical_probabilities,
    keyword_f1,
)
from topicbench.training.loop import fit_model

SMALL_ENCODER = EncoderConfig(family="recurrent", embedding_dim=32, hidden_size=16)


def quick_config(**overrides):
    defaults = dict(max_epochs=4, patience=None, batch_size=32, seed=7)
    defaults.update(overrides)
    return TrainConfig(**defaults)


# ---------------------------------------------------------------------------
# tune_thresholds
# ---------------------------------------------------------------------------


def exhaustive_best_thresholds(probs, gold, grid):
    """Oracle: recompute F1 at every grid point and argmax by scanning."""
    chosen = []
    for c in range(probs.shape[1]):
        scored = []
        for threshold in grid:
            pred = (probs[:, c] >= threshold).astype(int)
            tp = int(np.sum((pred == 1) & (gold[:, c] == 1)))
            fp = int(np.sum((pred == 1) & (gold[:, c] == 0)))
            fn = int(np.sum((pred == 0) & (gold[:, c] == 1)))
            p = tp / (tp + fp) if tp + fp else 0.0
            r = tp / (tp + fn) if tp + fn else 0.0
            scored.append(2 * p * r / (p + r) if p + r else 0.0)
        chosen.append(scored)
    return chosen


def test_threshold_grid_has_nine_values():
    assert len(THRESHOLD_GRID) == 9
    assert THRESHOLD_GRID[0] == 0.1 and THRESHOLD_GRID[-1] == 0.9


def test_tuned_threshold_is_grid_optimal_everywhere():
    rng = np.random.default_rng(3)
    for _ in range(30):
        docs = int(rng.integers(5, 60))
        classes = int(rng.integers(1, 8))
        probs = rng.random((docs, classes))
        gold = (rng.random((docs, classes)) < 0.35).astype(int)
        tuned = tune_thresholds(probs, gold)
        scores = exhaustive_best_thresholds(probs, gold, THRESHOLD_GRID)
        for c in range(classes):
            chosen = tuned.thresholds[f"c{c}"]
            chosen_f1 = scores[c][THRESHOLD_GRID.index(chosen)]
            assert all(chosen_f1 >= f1 for f1 in scores[c])
            # ties break to the lowest threshold
            first_best = THRESHOLD_GRID[int(np.argmax(scores[c]))]
            assert chosen == first_best


def test_perfectly_separated_probabilities_pick_lowest_threshold():
    probs = np.array([[0.0], [1.0], [1.0], [0.0]])
    gold = np.array([[0], [1], [1], [0]])
    tuned = tune_thresholds(probs, gold)
    assert tuned.thresholds["c0"] == 0.1


def test_threshold_set_round_trip(tmp_path):
    tuned = tune_thresholds(np.array([[0.4], [0.8]]), np.array([[0], [1]]), topics=["a"])
    path = tmp_path / "thresholds.json"
    tuned.save(path)
    from topicbench.training import ThresholdSet

    assert ThresholdSet.load(path).thresholds == tuned.thresholds


# ---------------------------------------------------------------------------
# train_flat
# ---------------------------------------------------------------------------


def test_train_flat_zero_epochs_returns_initialized_model(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=0, record_init_snapshots=True)
    ckpt = train_flat(data, config, encoder=SMALL_ENCODER, vocab=vocab)
    assert ckpt.provenance["epoch"] == 0
    for name, tensor in ckpt.state.items():
        assert torch.equal(tensor, ckpt.init_state[name])


def test_train_flat_same_seed_reproduces_training_trace(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=3)
    first = train_flat(data, config, encoder=SMALL_ENCODER, vocab=vocab)
    second = train_flat(data, config, encoder=SMALL_ENCODER, vocab=vocab)
    for a, b in zip(first.history, second.history):
        assert abs(a["train_loss"] - b["train_loss"]) < 1e-6
        assert abs(a["dev_metric"] - b["dev_metric"]) < 1e-6
    for name in first.state:
        assert torch.equal(first.state[name], second.state[name])
    different = train_flat(
        data, config.with_overrides(seed=99), encoder=SMALL_ENCODER, vocab=vocab
    )
    assert any(
        not torch.equal(first.state[name], different.state[name]) for name in first.state
    )


def test_train_flat_loss_decreases_over_first_epochs(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=3, seed=1)
    ckpt = train_flat(data, config, encoder=SMALL_ENCODER, vocab=vocab)
    losses = [h["train_loss"] for h in ckpt.history]
    assert losses[-1] < losses[0]


def test_train_flat_learns_separable_corpus(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=40, patience=None, seed=2)
    ckpt = train_flat(data, config, encoder=SMALL_ENCODER, vocab=vocab)
    probs = flat_probabilities(ckpt, data.dev, config)
    report = compute_metrics(
        apply_thresholds(probs, [0.5] * probs.shape[1]).predictions,
        np.stack([ex.y for ex in data.dev]),
    )
    assert report.macro_f1 > 60.0


def test_train_flat_empty_split_raises(tiny_corpus):
    tree, data, vocab = tiny_corpus
    empty = DatasetSplit(train=[], dev=data.dev, test=data.test, split_seed=0)
    with pytest.raises(ValueError):
        train_flat(empty, quick_config(), encoder=SMALL_ENCODER, vocab=vocab)


def test_early_stopping_halts_within_patience(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=30, patience=2, seed=3)
    ckpt = train_flat(data, config, encoder=SMALL_ENCODER, vocab=vocab)
    best_epoch = ckpt.provenance["epoch"]
    last_epoch = ckpt.history[-1]["epoch"]
    assert last_epoch - best_epoch <= 2
    assert last_epoch < 30 or best_epoch >= 28
    dev_metrics = [h["dev_metric"] for h in ckpt.history]
    if best_epoch > 0:
        assert ckpt.provenance["dev_metric"] == pytest.approx(max(dev_metrics))


def test_checkpoint_save_load_round_trip(tiny_corpus, tmp_path):
    tree, data, vocab = tiny_corpus
    ckpt = train_flat(data, quick_config(max_epochs=1), encoder=SMALL_ENCODER, vocab=vocab)
    path = tmp_path / "flat.ckpt"
    save_checkpoint(ckpt, path)
    loaded = load_checkpoint(path)
    assert loaded.provenance == ckpt.provenance
    assert loaded.vocab_hash == ckpt.vocab_hash
    assert loaded.model_spec == ckpt.model_spec
    for name in ckpt.state:
        assert torch.equal(loaded.state[name], ckpt.state[name])


# ---------------------------------------------------------------------------
# hierarchical / n-binary
# ---------------------------------------------------------------------------


def test_hierarchical_children_start_from_parent_final(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=2, record_init_snapshots=True)
    checkpoints = train_hierarchical(
        data, tree, config, encoder=SMALL_ENCODER, vocab=vocab
    )
    assert set(checkpoints) == set(training_order(tree))
    for topic, ckpt in checkpoints.items():
        parent = tree.node(topic).parent
        if parent == tree.root_id:
            assert ckpt.provenance["parent"] is None
        else:
            assert ckpt.provenance["parent"] == parent
            parent_final = checkpoints[parent].state
            for name, tensor in ckpt.init_state.items():
                assert torch.equal(tensor, parent_final[name])


def test_n_binary_has_no_parent_provenance(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=1, record_init_snapshots=True)
    checkpoints = train_n_binary(data, tree, config, encoder=SMALL_ENCODER, vocab=vocab)
    assert all(c.provenance["parent"] is None for c in checkpoints.values())
    # same-level siblings start from different seeded inits, not the parent
    order = training_order(tree)
    child = next(t for t in order if tree.node(t).depth == 2)
    parent = tree.node(child).parent
    child_init = checkpoints[child].init_state
    parent_final = checkpoints[parent].state
    assert any(
        not torch.equal(child_init[name], parent_final[name]) for name in child_init
    )


def test_single_topic_tree_degenerates_to_one_binary_trainer(tiny_corpus):
    _, data, vocab = tiny_corpus
    solo = load_taxonomy(
        [
            {"id": "root", "name": "", "parent": None},
            {"id": "only", "name": "", "parent": "root"},
        ]
    )
    def clipped(examples):
        return [
            type(ex)(id=ex.id, x=ex.x, text_len=ex.text_len, y=ex.y[:1], z=ex.z)
            for ex in examples
        ]

    data1 = DatasetSplit(
        train=clipped(data.train), dev=clipped(data.dev), test=clipped(data.test), split_seed=0
    )
    checkpoints = train_hierarchical(
        data1, solo, quick_config(max_epochs=1), encoder=SMALL_ENCODER, vocab=vocab
    )
    assert list(checkpoints) == ["only"]
    assert checkpoints["only"].provenance["parent"] is None


def test_scheduler_guard_raises_on_missing_parent():
    with pytest.raises(RuntimeError):
        _require_parent({}, "child", "parent")


def test_hierarchical_probabilities_assemble_columns(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=1)
    checkpoints = train_hierarchical(data, tree, config, encoder=SMALL_ENCODER, vocab=vocab)
    topics = training_order(tree)
    probs = hierarchical_probabilities(checkpoints, topics, data.dev, config)
    assert probs.shape == (len(data.dev), len(topics))
    assert probs.min() >= 0.0 and probs.max() <= 1.0
    with pytest.raises(KeyError):
        hierarchical_probabilities(checkpoints, topics + ["ghost"], data.dev, config)


# ---------------------------------------------------------------------------
# multitask
# ---------------------------------------------------------------------------


def test_multitask_beta_zero_matches_single_task_trace(tiny_corpus):
    tree, data, vocab = tiny_corpus
    base = quick_config(max_epochs=3, seed=11)
    single = train_flat(data, base, encoder=SMALL_ENCODER, vocab=vocab)
    multi = train_multitask(
        data,
        base.with_overrides(loss_weights=LossWeights(1.0, 0.0)),
        encoder=SMALL_ENCODER,
        vocab=vocab,
    )
    for a, b in zip(single.history, multi.history):
        assert a["train_loss"] == pytest.approx(b["train_loss"], abs=1e-9)
        assert a["dev_metric"] == pytest.approx(b["dev_metric"], abs=1e-9)


def test_multitask_learns_planted_keywords(tiny_corpus):
    # smoke-scale check that the keyword head trains at all; the planted
    # keyword F1 >= 95 gate runs at full desk scale in the acceptance suite
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=60, patience=None, seed=5, multitask=True)
    ckpt = train_multitask(data, config, encoder=SMALL_ENCODER, vocab=vocab)
    score = keyword_f1(ckpt, data.dev, config)
    assert score > 40.0


def test_multitask_applies_to_each_binary_model(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=1, multitask=True)
    checkpoints = train_hierarchical(data, tree, config, encoder=SMALL_ENCODER, vocab=vocab)
    for ckpt in checkpoints.values():
        assert ckpt.model_spec.multitask
        assert any(name.startswith("keyword_head") for name in ckpt.state)


def test_multitask_rejects_keywords_only_input(tiny_corpus):
    tree, data, vocab = tiny_corpus
    with pytest.raises(ValueError):
        train_multitask(
            data,
            quick_config(input_mode="keywords-only"),
            encoder=SMALL_ENCODER,
            vocab=vocab,
        )


# ---------------------------------------------------------------------------
# select_pos_weight
# ---------------------------------------------------------------------------


def test_pos_weight_candidates_default_list():
    config = TrainConfig()
    assert config.pos_weight_candidates == (1, 3, 5, 10, 15, 20, 25, 30, 35, 40)


def test_balanced_topic_selects_weight_one(tiny_corpus):
    tree, data, vocab = tiny_corpus
    config = quick_config(max_epochs=2, pos_weight_epochs=2, seed=13)
    spec = build_binary_spec(config, SMALL_ENCODER, vocab)
    collator = make_collator(SMALL_ENCODER)

    def build_net():
        return spec.build()

    weight = select_pos_weight(
        build_net, data.train, data.dev, 0, config, collator, candidates=(1, 5, 10)
    )
    assert weight == 1


def test_reference_defaults_per_configuration():
    flat_classical = TrainConfig.reference_defaults("flat", "recurrent")
    assert (flat_classical.max_epochs, flat_classical.patience) == (50, 10)
    assert flat_classical.learning_rate == pytest.approx(1e-3)
    hier_classical = TrainConfig.reference_defaults("hierarchical", "convolutional")
    assert (hier_classical.max_epochs, hier_classical.patience) == (10, 3)
    assert hier_classical.pos_weight_search
    flat_pre = TrainConfig.reference_defaults("flat", "pretrained")
    assert (flat_pre.max_epochs, flat_pre.patience) == (5, None)
    assert flat_pre.learning_rate == pytest.approx(2e-5)
    hier_pre = TrainConfig.reference_defaults("hierarchical", "pretrained")
    assert (hier_pre.max_epochs, hier_pre.patience) == (3, None)
    assert TrainConfig().batch_size == 128


# ---------------------------------------------------------------------------
# pretrained family smoke via stub adapter
# ---------------------------------------------------------------------------


def test_pretrained_family_trains_with_adapter(stub_adapter, tiny_corpus):
    tree, data, vocab = tiny_corpus
    from topicbench.corpus.encoding import encode_word_examples
    from topicbench.corpus import ingest, generate_synthetic, SynthConfig, split

    records, taxonomy = generate_synthetic(
        SynthConfig(docs_per_leaf=6, parents=2, children_per_parent=2), seed=3
    )
    word_tree = load_taxonomy(taxonomy)
    dataset = split(ingest(records).records, seed=2)
    word_data = DatasetSplit(
        train=encode_word_examples(dataset.train, word_tree)[0],
        dev=encode_word_examples(dataset.dev, word_tree)[0],
        test=encode_word_examples(dataset.test, word_tree)[0],
        split_seed=2,
    )
    encoder = EncoderConfig(family="pretrained", adapter_name="stub", adapter_dim=32)
    config = quick_config(max_epochs=1, batch_size=8)
    ckpt = train_flat(word_data, config, encoder=encoder, adapter=stub_adapter)
    probs = flat_probabilities(ckpt, word_data.dev, config, adapter=stub_adapter)
    assert probs.shape == (len(word_data.dev), word_tree.n)
