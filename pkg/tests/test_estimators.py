import numpy as np
import pytest
from sklearn.base import clone

from topicbench.estimators import FlatTopicClassifier, HierarchicalTopicClassifier
from topicbench.evaluation import THRESHOLD_GRID

TAXONOMY = [
    {"id": "root", "name": "root", "parent": None},
    {"id": "a", "name": "a", "parent": "root"},
    {"id": "a.x", "name": "a.x", "parent": "a"},
    {"id": "a.y", "name": "a.y", "parent": "a"},
    {"id": "b", "name": "b", "parent": "root"},
]
# training order: a, b, a.x, a.y
COLUMNS = ["a", "b", "a.x", "a.y"]


def toy_dataset(n_per_leaf=40, seed=0):
    """Sequences where topic membership is readable off dedicated token ids.

    Leaves: a.x -> tokens {10,11}, a.y -> {20,21}, b -> {30,31}; shared
    filler ids 1..5. Labels are ancestor-closed over TAXONOMY.
    """
    rng = np.random.default_rng(seed)
    X, y = [], []
    leaf_defs = [
        ((10, 11), [1, 0, 1, 0]),
        ((20, 21), [1, 0, 0, 1]),
        ((30, 31), [0, 1, 0, 0]),
    ]
    for tokens, labels in leaf_defs:
        for _ in range(n_per_leaf):
            seq = list(rng.integers(1, 6, size=6)) + list(
                rng.choice(tokens, size=3)
            )
            rng.shuffle(seq)
            X.append([int(t) for t in seq])
            y.append(labels)
    order = rng.permutation(len(X))
    return [X[i] for i in order], np.array([y[i] for i in order], dtype=np.int8)


def small_flat(**overrides):
    params = dict(
        embedding_dim=24,
        hidden_size=12,
        batch_size=32,
        max_epochs=30,
        patience=None,
        random_state=1,
    )
    params.update(overrides)
    return FlatTopicClassifier(**params)


# ---------------------------------------------------------------------------
# sklearn API conformance
# ---------------------------------------------------------------------------


def test_get_params_set_params_round_trip():
    est = small_flat()
    params = est.get_params()
    assert params["embedding_dim"] == 24
    est.set_params(max_epochs=3)
    assert est.max_epochs == 3
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_clone_drops_fitted_state():
    X, y = toy_dataset(n_per_leaf=8)
    est = small_flat(max_epochs=1).fit(X, y)
    assert hasattr(est, "checkpoint_")
    fresh = clone(est)
    assert not hasattr(fresh, "checkpoint_")


def test_predict_before_fit_raises():
    with pytest.raises(ValueError):
        small_flat().predict([[1, 2, 3]])


# ---------------------------------------------------------------------------
# input validation
# ---------------------------------------------------------------------------


def test_rejects_reserved_padding_id():
    with pytest.raises(ValueError, match="reserved"):
        small_flat(max_epochs=0).fit([[0, 1]], [[1]])


def test_rejects_negative_ids_and_empty_rows():
    with pytest.raises(ValueError):
        small_flat(max_epochs=0).fit([[-1]], [[1]])
    with pytest.raises(ValueError):
        small_flat(max_epochs=0).fit([[]], [[1]])


def test_rejects_row_count_mismatch():
    with pytest.raises(ValueError):
        small_flat(max_epochs=0).fit([[1], [2]], [[1]])


def test_rejects_non_binary_labels():
    with pytest.raises(ValueError):
        small_flat(max_epochs=0).fit([[1]], [[2]])


# ---------------------------------------------------------------------------
# flat estimator behavior
# ---------------------------------------------------------------------------


def test_flat_fit_predict_shapes_and_learning():
    X, y = toy_dataset()
    est = small_flat().fit(X, y)
    probs = est.predict_proba(X[:10])
    assert probs.shape == (10, 4)
    assert probs.min() >= 0 and probs.max() <= 1
    preds = est.predict(X)
    assert preds.shape == np.asarray(y).shape
    # separable by construction: most labels recovered
    agreement = (preds == y).mean()
    assert agreement > 0.9


def test_flat_thresholds_come_from_grid():
    X, y = toy_dataset(n_per_leaf=12)
    est = small_flat(max_epochs=4).fit(X, y)
    assert set(est.thresholds_.thresholds.values()) <= set(THRESHOLD_GRID)


def test_flat_explicit_validation_split():
    X, y = toy_dataset(n_per_leaf=12)
    est = small_flat(max_epochs=2).fit(X[:24], y[:24], X_val=X[24:], y_val=y[24:])
    assert est.predict_proba(X[:3]).shape == (3, 4)


def test_flat_accepts_padded_array_input():
    X, y = toy_dataset(n_per_leaf=8)
    width = max(len(row) for row in X)
    padded = np.ones((len(X), width), dtype=np.int64)  # pad with a real id
    for i, row in enumerate(X):
        padded[i, : len(row)] = row
    est = small_flat(max_epochs=1).fit(padded, y)
    assert est.predict(padded[:5]).shape == (5, 4)


# ---------------------------------------------------------------------------
# hierarchical estimator behavior
# ---------------------------------------------------------------------------


def test_hierarchical_fit_predict_and_parent_provenance():
    X, y = toy_dataset()
    est = HierarchicalTopicClassifier(
        taxonomy=TAXONOMY,
        embedding_dim=24,
        hidden_size=12,
        batch_size=32,
        max_epochs=8,
        patience=None,
        random_state=1,
    ).fit(X, y)
    assert list(est.topics_) == COLUMNS
    assert est.checkpoints_["a.x"].provenance["parent"] == "a"
    assert est.checkpoints_["a"].provenance["parent"] is None
    preds = est.predict(X[:20])
    assert preds.shape == (20, 4)


def test_n_binary_variant_has_no_parents():
    X, y = toy_dataset(n_per_leaf=6)
    est = HierarchicalTopicClassifier(
        taxonomy=TAXONOMY,
        parent_initialization=False,
        embedding_dim=24,
        hidden_size=12,
        max_epochs=1,
        patience=None,
        random_state=0,
    ).fit(X, y)
    assert all(c.provenance["parent"] is None for c in est.checkpoints_.values())


def test_hierarchical_rejects_wrong_label_width():
    X, y = toy_dataset(n_per_leaf=4)
    est = HierarchicalTopicClassifier(taxonomy=TAXONOMY, max_epochs=1)
    with pytest.raises(ValueError, match="columns"):
        est.fit(X, y[:, :3])


def test_hierarchical_requires_taxonomy():
    with pytest.raises(ValueError, match="taxonomy"):
        HierarchicalTopicClassifier().fit([[1]], [[1]])
