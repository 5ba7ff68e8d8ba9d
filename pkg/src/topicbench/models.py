"""Classification and keyword-labeling heads, loss algebra and full networks.

The multi-task network shares everything up to the encoder output; the two
heads sit on top and each loss only reaches its own head (plus the shared
trunk). Heads output probabilities directly (sigmoid), and the binary
cross-entropy below clips them before taking logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
from torch import nn

from .encoders import ConvolutionalEncoder, EncoderConfig, RecurrentEncoder

PROB_EPS = 1e-7

FLAT_HIDDEN = 72
HIERARCHICAL_HIDDEN = 16


@dataclass
class LossWeights:
    """Scales for the topic loss and the keyword-labeling loss."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be non-negative")
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("at least one loss weight must be positive")


class TopicHead(nn.Module):
    """Summary vector to per-topic probabilities.

    ``hidden`` inserts one ReLU layer before the per-topic projections
    (used by the classical encoders); pretrained summaries project
    directly.
    """

    def __init__(self, in_dim: int, n_outputs: int, hidden: int | None = None):
        super().__init__()
        self.n_outputs = n_outputs
        if hidden:
            self.trunk = nn.Sequential(nn.Linear(in_dim, hidden), nn.ReLU())
            projection_dim = hidden
        else:
            self.trunk = nn.Identity()
            projection_dim = in_dim
        self.projection = nn.Linear(projection_dim, n_outputs)

    def forward(self, summary: torch.Tensor) -> torch.Tensor:
        if summary.shape[-1] != self._in_dim():
            raise ValueError(
                f"summary dimension {summary.shape[-1]} does not match head input {self._in_dim()}"
            )
        return torch.sigmoid(self.projection(self.trunk(summary)))

    def _in_dim(self) -> int:
        first = self.trunk[0] if isinstance(self.trunk, nn.Sequential) else self.projection
        return first.in_features


class KeywordHead(nn.Module):
    """One is-a-keyword probability per token position."""

    def __init__(self, token_dim: int):
        super().__init__()
        self.projection = nn.Linear(token_dim, 1)

    def forward(self, token_vectors: torch.Tensor) -> torch.Tensor:
        if token_vectors.numel() == 0:
            raise ValueError("keyword head needs at least one token vector")
        return torch.sigmoid(self.projection(token_vectors)).squeeze(-1)


def bce_loss(probs: torch.Tensor, targets: torch.Tensor, pos_weight: float = 1.0) -> torch.Tensor:
    """Mean binary cross-entropy with a positive-class weight.

    Probabilities are clipped to [eps, 1-eps] before the logs; pad/masked
    positions must be filtered out by the caller.
    """
    if probs.shape != targets.shape:
        raise ValueError(f"probs shape {tuple(probs.shape)} != targets shape {tuple(targets.shape)}")
    p = probs.clamp(PROB_EPS, 1.0 - PROB_EPS)
    targets = targets.to(p.dtype)
    loss = -(pos_weight * targets * torch.log(p) + (1.0 - targets) * torch.log1p(-p))
    return loss.mean()


def combined_loss(l1, l2, weights: LossWeights):
    """Weighted sum of the topic loss and the keyword loss."""
    for value in (l1, l2):
        scalar = float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
        if not math.isfinite(scalar):
            raise ValueError(f"loss terms must be finite, got {scalar}")
    return weights.alpha * l1 + weights.beta * l2


def forward_topic(head: TopicHead, summary: torch.Tensor) -> torch.Tensor:
    return head(summary)


def forward_keywords(head: KeywordHead, token_vectors: torch.Tensor) -> torch.Tensor:
    return head(token_vectors)


@dataclass
class ModelSpec:
    """Everything needed to rebuild a network from a checkpoint."""

    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    n_outputs: int = 1
    head_hidden: int | None = None
    multitask: bool = False
    vocab_size: int = 0
    max_len: int = 115

    def build(self, embedding_weights: torch.Tensor | None = None) -> "ClassicalTextClassifier":
        if self.encoder.family == "pretrained":
            raise ValueError("pretrained networks are built via build_pretrained(adapter)")
        return ClassicalTextClassifier(self, embedding_weights)

    def build_pretrained(self, adapter) -> "PretrainedTextClassifier":
        return PretrainedTextClassifier(self, adapter)

    def to_json(self) -> dict:
        return {
            "encoder": self.encoder.to_json(),
            "n_outputs": self.n_outputs,
            "head_hidden": self.head_hidden,
            "multitask": self.multitask,
            "vocab_size": self.vocab_size,
            "max_len": self.max_len,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ModelSpec":
        return cls(
            encoder=EncoderConfig.from_json(payload["encoder"]),
            n_outputs=payload["n_outputs"],
            head_hidden=payload["head_hidden"],
            multitask=payload["multitask"],
            vocab_size=payload["vocab_size"],
            max_len=payload["max_len"],
        )


class ClassicalTextClassifier(nn.Module):
    """Embedding + recurrent/convolutional encoder + heads.

    The keyword head is constructed last so that networks with and without
    it draw identical initial parameters for all shared layers under the
    same seed.
    """

    def __init__(self, spec: ModelSpec, embedding_weights: torch.Tensor | None = None):
        super().__init__()
        if spec.vocab_size <= 0:
            raise ValueError("vocab_size must be positive for classical networks")
        self.spec = spec
        self.embedding = nn.Embedding(
            spec.vocab_size, spec.encoder.embedding_dim, padding_idx=0
        )
        if embedding_weights is not None:
            if embedding_weights.shape != self.embedding.weight.shape:
                raise ValueError("embedding weight matrix has the wrong shape")
            with torch.no_grad():
                self.embedding.weight.copy_(embedding_weights)
        if spec.encoder.family == "recurrent":
            self.encoder = RecurrentEncoder(spec.encoder)
        elif spec.encoder.family == "convolutional":
            self.encoder = ConvolutionalEncoder(spec.encoder, max_len=spec.max_len)
        else:
            raise ValueError(f"not a classical family: {spec.encoder.family!r}")
        self.topic_head = TopicHead(spec.encoder.summary_dim, spec.n_outputs, spec.head_hidden)
        self.keyword_head = KeywordHead(spec.encoder.token_dim) if spec.multitask else None

    def forward(self, token_ids: torch.Tensor, mask: torch.Tensor):
        encoding = self.encoder(self.embedding(token_ids), mask)
        topic_probs = self.topic_head(encoding.summary)
        keyword_probs = (
            self.keyword_head(encoding.token_vectors) if self.keyword_head is not None else None
        )
        return topic_probs, keyword_probs


class PretrainedTextClassifier(nn.Module):
    """Adapter backbone + direct projection heads."""

    def __init__(self, spec: ModelSpec, adapter):
        super().__init__()
        self.spec = spec
        self.adapter = adapter
        self.backbone = adapter.torch_module()
        self.topic_head = TopicHead(adapter.dim, spec.n_outputs, hidden=None)
        self.keyword_head = KeywordHead(adapter.dim) if spec.multitask else None

    def forward(self, token_ids: torch.Tensor, mask: torch.Tensor):
        token_vectors, summary = self.backbone(token_ids, mask)
        topic_probs = self.topic_head(summary)
        keyword_probs = (
            self.keyword_head(token_vectors) if self.keyword_head is not None else None
        )
        return topic_probs, keyword_probs
