"""Pretrained contextual encoder adapters.

An adapter owns its subword tokenizer and model weights. The contract:
given text (or pre-split words), produce subword tokens, a word-to-subword
alignment, one vector per subword, and a sequence summary (the leading
classification token's state for transformer encoders). Word-level keyword
labels are propagated to subwords by copying each word's label to all of
its pieces.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .config import SequenceEncoding


class AdapterUnavailableError(RuntimeError):
    """The requested pretrained encoder cannot be loaded in this environment.

    Classical encoder families remain fully usable when this is raised.
    """


@dataclass
class AdapterEncoding:
    subword_tokens: list[str]
    word_ids: list[int | None]
    token_vectors: torch.Tensor
    summary: torch.Tensor


class PretrainedAdapter(ABC):
    """Interface every pretrained encoder backend implements."""

    name: str = "adapter"
    dim: int = 768

    @abstractmethod
    def encode(self, text: str) -> AdapterEncoding:
        """Deterministically encode one text (inference contract)."""

    @abstractmethod
    def tokenize_words(self, words: Sequence[str]) -> tuple[list[int], list[int | None]]:
        """Subword ids plus, per subword, the index of the word it came from
        (None for special tokens)."""

    @abstractmethod
    def torch_module(self) -> nn.Module:
        """Trainable module mapping (ids, attention mask) to
        (subword vectors, summary)."""

    @property
    def pad_id(self) -> int:
        return 0


def propagate_word_labels(
    word_labels: Sequence[int], word_ids: Sequence[int | None]
) -> np.ndarray:
    """Copy each word's keyword label to all of its subwords.

    Special-token positions (no originating word) are labeled 0 and are
    excluded from the keyword loss by the training mask.
    """
    labels = np.zeros(len(word_ids), dtype=np.int8)
    for position, word_index in enumerate(word_ids):
        if word_index is not None and word_index < len(word_labels):
            labels[position] = word_labels[word_index]
    return labels


def encode_pretrained(text: str, adapter: PretrainedAdapter) -> SequenceEncoding:
    """Sequence encoding through a pretrained adapter.

    Raises AdapterUnavailableError when the adapter cannot supply its
    model; there is no degraded fallback on this path.
    """
    encoding = adapter.encode(text)
    return SequenceEncoding(token_vectors=encoding.token_vectors, summary=encoding.summary)


class HuggingFaceAdapter(PretrainedAdapter):
    """Adapter over a transformers AutoModel/AutoTokenizer pair.

    The summary is the first (classification) token's last hidden state.
    Loading is lazy so that importing this module never requires the
    transformers package or network access.
    """

    def __init__(self, name: str = "bert-base-uncased"):
        self.name = name
        self._tokenizer = None
        self._model = None

    def _load(self):
        if self._model is not None:
            return
        try:
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise AdapterUnavailableError(
                "the transformers package is not installed; install the "
                "'pretrained' extra to use pretrained encoders"
            ) from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(self.name, use_fast=True)
            self._model = AutoModel.from_pretrained(self.name)
        except Exception as exc:
            raise AdapterUnavailableError(
                f"could not load pretrained encoder {self.name!r}: {exc}"
            ) from exc
        self.dim = int(self._model.config.hidden_size)

    def encode(self, text: str) -> AdapterEncoding:
        self._load()
        words = text.lower().split()
        ids, word_ids = self.tokenize_words(words)
        id_tensor = torch.tensor([ids], dtype=torch.long)
        mask = torch.ones_like(id_tensor)
        self._model.eval()
        with torch.no_grad():
            out = self._model(input_ids=id_tensor, attention_mask=mask)
        states = out.last_hidden_state[0]
        return AdapterEncoding(
            subword_tokens=self._tokenizer.convert_ids_to_tokens(ids),
            word_ids=word_ids,
            token_vectors=states,
            summary=states[0],
        )

    def tokenize_words(self, words: Sequence[str]) -> tuple[list[int], list[int | None]]:
        self._load()
        batch = self._tokenizer(
            list(words), is_split_into_words=True, truncation=True, max_length=512
        )
        return batch["input_ids"], batch.word_ids()

    def torch_module(self) -> nn.Module:
        self._load()
        return _HuggingFaceBackbone(self._model)

    @property
    def pad_id(self) -> int:
        self._load()
        return int(self._tokenizer.pad_token_id or 0)


class _HuggingFaceBackbone(nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, ids: torch.Tensor, mask: torch.Tensor):
        out = self.model(input_ids=ids, attention_mask=mask)
        states = out.last_hidden_state
        return states, states[:, 0]
