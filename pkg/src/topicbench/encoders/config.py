"""Encoder configuration and shared output container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

FAMILIES = ("recurrent", "convolutional", "pretrained")


@dataclass
class SequenceEncoding:
    """Per-token contextual vectors plus a fixed-size summary vector.

    ``token_vectors`` has one row per input (sub)token; batched encoders
    return an extra leading batch dimension on both fields.
    """

    token_vectors: torch.Tensor
    summary: torch.Tensor


@dataclass
class EncoderConfig:
    family: str = "recurrent"
    embedding_dim: int = 300
    hidden_size: int = 72
    filter_sizes: tuple[int, ...] = (3, 5, 9)
    filters_per_size: int = 64
    paddings: tuple[int, ...] = (1, 2, 4)
    pooling_window: int = 32
    bottleneck_dim: int = 512
    adapter_name: str | None = None
    adapter_dim: int = 768

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown encoder family: {self.family!r}")
        if self.family == "convolutional":
            if len(self.filter_sizes) != len(self.paddings):
                raise ValueError("filter_sizes and paddings must pair up")
            for size, pad in zip(self.filter_sizes, self.paddings):
                if 2 * pad - size + 1 != 0:
                    raise ValueError(
                        f"filter size {size} with padding {pad} does not preserve "
                        f"sequence length (need 2*pad - size + 1 == 0)"
                    )

    @property
    def token_dim(self) -> int:
        if self.family == "recurrent":
            return 2 * self.hidden_size
        if self.family == "convolutional":
            return len(self.filter_sizes) * self.filters_per_size
        return self.adapter_dim

    @property
    def summary_dim(self) -> int:
        if self.family == "recurrent":
            return 3 * self.token_dim
        if self.family == "convolutional":
            return self.bottleneck_dim
        return self.adapter_dim

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "embedding_dim": self.embedding_dim,
            "hidden_size": self.hidden_size,
            "filter_sizes": list(self.filter_sizes),
            "filters_per_size": self.filters_per_size,
            "paddings": list(self.paddings),
            "pooling_window": self.pooling_window,
            "bottleneck_dim": self.bottleneck_dim,
            "adapter_name": self.adapter_name,
            "adapter_dim": self.adapter_dim,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "EncoderConfig":
        payload = dict(payload)
        payload["filter_sizes"] = tuple(payload.get("filter_sizes", (3, 5, 9)))
        payload["paddings"] = tuple(payload.get("paddings", (1, 2, 4)))
        return cls(**payload)


def load_word_vectors(path, vocab, dim: int, seed: int = 0) -> torch.Tensor:
    """Embedding matrix for a vocabulary from a word-vector text file.

    Expected format: one token followed by ``dim`` floats per line. The
    padding row stays zero; the unknown marker and any vocabulary token
    absent from the file get small random vectors (they stay trainable).
    """
    rng = np.random.default_rng(seed)
    matrix = rng.normal(0.0, 0.1, size=(len(vocab), dim)).astype(np.float32)
    matrix[vocab.pad_index] = 0.0
    found = 0
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            parts = line.rstrip("\n").split(" ")
            token = parts[0]
            if token not in vocab.index:
                continue
            values = parts[1:]
            if len(values) != dim:
                raise ValueError(
                    f"word vector for {token!r} has {len(values)} dims, expected {dim}"
                )
            matrix[vocab.index[token]] = np.asarray(values, dtype=np.float32)
            found += 1
    return torch.from_numpy(matrix)
