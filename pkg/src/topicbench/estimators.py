"""Scikit-learn style estimators wrapping the trainers.

These follow the usual conventions: constructor arguments are stored
verbatim (so ``get_params``/``set_params``/``clone`` work), learned state
lands in trailing-underscore attributes during ``fit``, and inputs are
validated through the shared helpers. ``X`` is a collection of
variable-length token id sequences (id 0 is reserved for padding) and
``y`` is a binary indicator matrix with one column per topic.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .corpus.encoding import EncodedExample
from .corpus.records import DatasetSplit
from .encoders import EncoderConfig
from .evaluation import apply_thresholds
from .taxonomy import TaxonomyTree, load_taxonomy, training_order
from .training import (
    TrainConfig,
    ThresholdSet,
    train_flat,
    train_hierarchical,
    tune_thresholds,
)
from .training.inference import flat_probabilities, hierarchical_probabilities
from .models import LossWeights
from .validation import as_binary_matrix, as_token_sequences, check_fitted


def _examples_from_arrays(X, y, keyword_labels=None) -> list[EncodedExample]:
    sequences = as_token_sequences(X)
    labels = as_binary_matrix(y, "y")
    if len(sequences) != labels.shape[0]:
        raise ValueError(f"X has {len(sequences)} rows but y has {labels.shape[0]}")
    if any(0 in seq for seq in sequences):
        raise ValueError("token id 0 is reserved for padding; use ids >= 1")
    if any(len(seq) == 0 for seq in sequences):
        raise ValueError("every sequence needs at least one token")
    examples = []
    for i, seq in enumerate(sequences):
        if keyword_labels is not None:
            z = np.asarray(keyword_labels[i], dtype=np.int8)
            if len(z) != len(seq):
                raise ValueError(f"keyword_labels[{i}] length {len(z)} != sequence length {len(seq)}")
        else:
            z = np.zeros(len(seq), dtype=np.int8)
        examples.append(
            EncodedExample(id=str(i), x=seq, text_len=len(seq), y=labels[i], z=z)
        )
    return examples


def _carve_validation(examples, fraction: float, seed: int):
    import random as _random

    order = list(range(len(examples)))
    _random.Random(seed).shuffle(order)
    n_val = max(1, int(len(examples) * fraction))
    val_idx = set(order[:n_val])
    train = [examples[i] for i in order[n_val:]]
    val = [examples[i] for i in order[:n_val]]
    return train, val, val_idx


class _TopicClassifierBase(BaseEstimator, ClassifierMixin):
    def _encoder_config(self) -> EncoderConfig:
        if isinstance(self.encoder, EncoderConfig):
            return self.encoder
        return EncoderConfig(
            family=self.encoder,
            embedding_dim=self.embedding_dim,
            hidden_size=self.hidden_size,
        )

    def _train_config(self) -> TrainConfig:
        alpha, beta = self.loss_weights
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.random_state,
            loss_weights=LossWeights(alpha, beta),
            input_mode="text-only",
            multitask=self.multitask,
        )

    def _max_token(self, examples) -> int:
        return max(max(ex.x) for ex in examples)

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        pred = apply_thresholds(probs, self.thresholds_.vector(self.topics_), self.topics_)
        return pred.predictions

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.target_tags.multi_output = True
        tags.input_tags.two_d_array = False
        return tags


class FlatTopicClassifier(_TopicClassifierBase):
    """Single shared model with one sigmoid output per topic.

    Parameters mirror the reference defaults for the flat setting; shrink
    ``embedding_dim``/``hidden_size``/``max_epochs`` for quick runs.
    """

    def __init__(
        self,
        encoder="recurrent",
        embedding_dim=300,
        hidden_size=72,
        learning_rate=1e-3,
        batch_size=128,
        max_epochs=50,
        patience=10,
        multitask=False,
        loss_weights=(1.0, 1.0),
        validation_fraction=0.1,
        tune_decision_thresholds=True,
        random_state=0,
    ):
        self.encoder = encoder
        self.embedding_dim = embedding_dim
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.multitask = multitask
        self.loss_weights = loss_weights
        self.validation_fraction = validation_fraction
        self.tune_decision_thresholds = tune_decision_thresholds
        self.random_state = random_state

    def fit(self, X, y, X_val=None, y_val=None, keyword_labels=None):
        examples = _examples_from_arrays(X, y, keyword_labels)
        if X_val is not None:
            train_examples = examples
            val_examples = _examples_from_arrays(X_val, y_val)
        else:
            train_examples, val_examples, _ = _carve_validation(
                examples, self.validation_fraction, self.random_state
            )
        n_topics = examples[0].y.shape[0]
        self.topics_ = tuple(f"c{i}" for i in range(n_topics))

        data = DatasetSplit(train=train_examples, dev=val_examples, test=[], split_seed=self.random_state)
        config = self._train_config()
        vocab_size = max(self._max_token(examples) + 1, 2)
        checkpoint = train_flat(
            data,
            config,
            encoder=self._encoder_config(),
            vocab=_SizedVocab(vocab_size),
        )
        self.checkpoint_ = checkpoint
        self.n_topics_ = n_topics
        self.config_ = config

        if self.tune_decision_thresholds and val_examples:
            val_probs = flat_probabilities(checkpoint, val_examples, config)
            val_gold = np.stack([ex.y for ex in val_examples])
            self.thresholds_ = tune_thresholds(val_probs, val_gold, self.topics_)
        else:
            self.thresholds_ = ThresholdSet.constant(self.topics_)
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_fitted(self, "checkpoint_")
        sequences = as_token_sequences(X)
        dummy = np.zeros((len(sequences), self.n_topics_), dtype=np.int8)
        examples = _examples_from_arrays(sequences, dummy)
        return flat_probabilities(self.checkpoint_, examples, self.config_)


class HierarchicalTopicClassifier(_TopicClassifierBase):
    """One-vs-all binary model per topic with parent initialization.

    ``taxonomy`` is a taxonomy document (list of id/name/parent objects) or
    a loaded tree; label columns of ``y`` must follow the tree's
    deterministic training order. ``parent_initialization=False`` gives the
    n-binary ablation.
    """

    def __init__(
        self,
        taxonomy=None,
        parent_initialization=True,
        encoder="recurrent",
        embedding_dim=300,
        hidden_size=72,
        learning_rate=1e-3,
        batch_size=128,
        max_epochs=10,
        patience=3,
        multitask=False,
        loss_weights=(1.0, 1.0),
        validation_fraction=0.1,
        tune_decision_thresholds=True,
        random_state=0,
    ):
        self.taxonomy = taxonomy
        self.parent_initialization = parent_initialization
        self.encoder = encoder
        self.embedding_dim = embedding_dim
        self.hidden_size = hidden_size
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.multitask = multitask
        self.loss_weights = loss_weights
        self.validation_fraction = validation_fraction
        self.tune_decision_thresholds = tune_decision_thresholds
        self.random_state = random_state

    def _tree(self) -> TaxonomyTree:
        if self.taxonomy is None:
            raise ValueError("taxonomy is required")
        if isinstance(self.taxonomy, TaxonomyTree):
            return self.taxonomy
        return load_taxonomy(self.taxonomy)

    def fit(self, X, y, X_val=None, y_val=None, keyword_labels=None):
        tree = self._tree()
        topics = training_order(tree)
        examples = _examples_from_arrays(X, y, keyword_labels)
        if examples[0].y.shape[0] != len(topics):
            raise ValueError(
                f"y has {examples[0].y.shape[0]} columns but the taxonomy defines {len(topics)} topics"
            )
        if X_val is not None:
            train_examples = examples
            val_examples = _examples_from_arrays(X_val, y_val)
        else:
            train_examples, val_examples, _ = _carve_validation(
                examples, self.validation_fraction, self.random_state
            )
        self.topics_ = tuple(topics)
        self.tree_ = tree
        data = DatasetSplit(train=train_examples, dev=val_examples, test=[], split_seed=self.random_state)
        config = self._train_config()
        vocab_size = max(self._max_token(examples) + 1, 2)
        self.checkpoints_ = train_hierarchical(
            data,
            tree,
            config,
            encoder=self._encoder_config(),
            vocab=_SizedVocab(vocab_size),
            parent_init=self.parent_initialization,
        )
        self.n_topics_ = len(topics)
        self.config_ = config

        if self.tune_decision_thresholds and val_examples:
            val_probs = hierarchical_probabilities(self.checkpoints_, topics, val_examples, config)
            val_gold = np.stack([ex.y for ex in val_examples])
            self.thresholds_ = tune_thresholds(val_probs, val_gold, self.topics_)
        else:
            self.thresholds_ = ThresholdSet.constant(self.topics_)
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_fitted(self, "checkpoints_")
        sequences = as_token_sequences(X)
        dummy = np.zeros((len(sequences), self.n_topics_), dtype=np.int8)
        examples = _examples_from_arrays(sequences, dummy)
        return hierarchical_probabilities(self.checkpoints_, list(self.topics_), examples, self.config_)


class _SizedVocab:
    """Duck-typed stand-in when only the table size and its hash matter."""

    def __init__(self, size: int):
        self._size = size

    def __len__(self) -> int:
        return self._size

    def content_hash(self) -> str:
        return f"raw-token-ids-{self._size}"
