"""Token-aligned convolutional encoder with windowed max pooling.

Filter sizes and symmetric paddings are chosen so each filter emits
exactly one vector per input token, which keeps per-token labeling
possible. The summary pools feature maps over fixed windows of positions
and projects the result through a bottleneck layer.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .config import EncoderConfig, SequenceEncoding


class ConvolutionalEncoder(nn.Module):
    def __init__(self, config: EncoderConfig | None = None, max_len: int = 115):
        super().__init__()
        self.config = config or EncoderConfig(family="convolutional")
        self.max_len = max_len
        self.n_windows = math.ceil(max_len / self.config.pooling_window)
        self.convolutions = nn.ModuleList(
            nn.Conv1d(
                in_channels=self.config.embedding_dim,
                out_channels=self.config.filters_per_size,
                kernel_size=size,
                padding=pad,
            )
            for size, pad in zip(self.config.filter_sizes, self.config.paddings)
        )
        self.bottleneck = nn.Linear(self.n_windows * self.config.token_dim, self.config.bottleneck_dim)

    def forward(self, embedded: torch.Tensor, mask: torch.Tensor) -> SequenceEncoding:
        if mask.sum(dim=1).eq(0).any():
            raise ValueError("convolutional encoder requires at least one real token per sequence")
        channels_first = embedded.transpose(1, 2)
        maps = [torch.relu(conv(channels_first)) for conv in self.convolutions]
        token_vectors = torch.cat(maps, dim=1).transpose(1, 2)

        summary = self._pooled_summary(token_vectors, mask)
        return SequenceEncoding(token_vectors=token_vectors, summary=summary)

    def _pooled_summary(self, token_vectors: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        batch, length, dim = token_vectors.shape
        window = self.config.pooling_window
        padded_len = self.n_windows * window
        if length > self.max_len:
            raise ValueError(
                f"sequence length {length} exceeds configured maximum {self.max_len}"
            )

        neg_inf = torch.finfo(token_vectors.dtype).min
        features = token_vectors.masked_fill(~mask.unsqueeze(-1), neg_inf)
        if length < padded_len:
            filler = features.new_full((batch, padded_len - length, dim), neg_inf)
            features = torch.cat([features, filler], dim=1)
            mask = torch.cat(
                [mask, mask.new_zeros(batch, padded_len - length)], dim=1
            )

        windows = features.view(batch, self.n_windows, window, dim)
        pooled = windows.max(dim=2).values
        # windows made only of padding contribute zeros, not -inf
        window_real = mask.view(batch, self.n_windows, window).any(dim=2)
        pooled = torch.where(window_real.unsqueeze(-1), pooled, torch.zeros_like(pooled))
        return torch.relu(self.bottleneck(pooled.reshape(batch, -1)))

    def encode(self, embedded: torch.Tensor) -> SequenceEncoding:
        """Single unpadded sequence (N x embedding_dim) convenience."""
        if embedded.dim() != 2 or embedded.shape[0] == 0:
            raise ValueError("expected a non-empty (tokens x dim) matrix")
        mask = torch.ones(1, embedded.shape[0], dtype=torch.bool)
        out = self.forward(embedded.unsqueeze(0), mask)
        return SequenceEncoding(token_vectors=out.token_vectors[0], summary=out.summary[0])
