"""Input validation helpers shared by estimators, heads and metrics."""

from __future__ import annotations

import numpy as np


def as_binary_matrix(a, name: str = "array") -> np.ndarray:
    """Coerce to a 2-D {0,1} integer matrix, raising ValueError otherwise."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 values")
    return arr.astype(np.int8, copy=False)


def as_probability_matrix(a, name: str = "array") -> np.ndarray:
    """Coerce to a 2-D float matrix with entries in [0, 1]."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} must contain probabilities in [0, 1]")
    return arr


def check_consistent_shape(a: np.ndarray, b: np.ndarray, names: str = "arrays") -> None:
    if a.shape != b.shape:
        raise ValueError(f"{names} must have equal shapes, got {a.shape} vs {b.shape}")


def as_token_sequences(X, name: str = "X") -> list[list[int]]:
    """Validate a collection of variable-length non-negative token id sequences."""
    if isinstance(X, np.ndarray):
        if X.ndim != 2:
            raise ValueError(f"{name} array input must be 2-dimensional")
        X = X.tolist()
    seqs = []
    for i, row in enumerate(X):
        seq = [int(t) for t in row]
        if any(t < 0 for t in seq):
            raise ValueError(f"{name}[{i}] contains negative token ids")
        seqs.append(seq)
    return seqs


def check_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise ValueError(
            f"{type(estimator).__name__} is not fitted yet; call fit before using this method"
        )
