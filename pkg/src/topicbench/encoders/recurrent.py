"""Bidirectional recurrent encoder with three pooled summary views."""

from __future__ import annotations

import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .config import EncoderConfig, SequenceEncoding


class AttentionPool(nn.Module):
    """Learned-query word attention over token vectors.

    Scores are ``u_i = tanh(W h_i + b)`` matched against a learned query
    vector; a masked softmax turns them into weights and the output is the
    weighted sum of token vectors.
    """

    def __init__(self, dim: int):
        super().__init__()
        self.projection = nn.Linear(dim, dim)
        self.query = nn.Parameter(torch.zeros(dim))
        nn.init.normal_(self.query, std=0.1)

    def forward(self, token_vectors: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        hidden = torch.tanh(self.projection(token_vectors))
        scores = hidden @ self.query
        scores = scores.masked_fill(~mask, float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        return torch.einsum("bl,bld->bd", weights, token_vectors)

    def attention_weights(self, token_vectors: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        hidden = torch.tanh(self.projection(token_vectors))
        scores = hidden @ self.query
        scores = scores.masked_fill(~mask, float("-inf"))
        return torch.softmax(scores, dim=-1)


class RecurrentEncoder(nn.Module):
    """BiLSTM over embedded tokens; summary = [max pool, mean pool, attention].

    Padding positions are excluded from the recurrence (packing) and from
    every pooled view, so batch composition never changes an encoding.
    """

    def __init__(self, config: EncoderConfig | None = None):
        super().__init__()
        self.config = config or EncoderConfig(family="recurrent")
        self.lstm = nn.LSTM(
            input_size=self.config.embedding_dim,
            hidden_size=self.config.hidden_size,
            bidirectional=True,
            batch_first=True,
        )
        self.attention = AttentionPool(self.config.token_dim)

    def forward(self, embedded: torch.Tensor, mask: torch.Tensor) -> SequenceEncoding:
        lengths = mask.sum(dim=1)
        if (lengths == 0).any():
            raise ValueError("recurrent encoder requires at least one real token per sequence")
        packed = pack_padded_sequence(
            embedded, lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        states, _ = self.lstm(packed)
        token_vectors, _ = pad_packed_sequence(
            states, batch_first=True, total_length=embedded.shape[1]
        )

        neg_inf = torch.finfo(token_vectors.dtype).min
        masked = token_vectors.masked_fill(~mask.unsqueeze(-1), neg_inf)
        max_pool = masked.max(dim=1).values
        mean_pool = (token_vectors * mask.unsqueeze(-1)).sum(dim=1) / lengths.unsqueeze(-1)
        context = self.attention(token_vectors, mask)

        summary = torch.cat([max_pool, mean_pool, context], dim=-1)
        return SequenceEncoding(token_vectors=token_vectors, summary=summary)

    def encode(self, embedded: torch.Tensor) -> SequenceEncoding:
        """Single unpadded sequence (N x embedding_dim) convenience."""
        if embedded.dim() != 2 or embedded.shape[0] == 0:
            raise ValueError("expected a non-empty (tokens x dim) matrix")
        mask = torch.ones(1, embedded.shape[0], dtype=torch.bool)
        out = self.forward(embedded.unsqueeze(0), mask)
        return SequenceEncoding(token_vectors=out.token_vectors[0], summary=out.summary[0])
