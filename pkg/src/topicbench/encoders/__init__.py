"""Sequence encoders: one contextual vector per input token plus a summary.

Three interchangeable families share the same output contract so the
classification and keyword-labeling heads never care which encoder
produced the vectors. Token alignment (one vector per input token) is
load-bearing: the keyword head labels positions.
"""

from .config import EncoderConfig, SequenceEncoding, load_word_vectors
from .convolutional import ConvolutionalEncoder
from .pretrained import (
    AdapterEncoding,
    AdapterUnavailableError,
    HuggingFaceAdapter,
    PretrainedAdapter,
    encode_pretrained,
    propagate_word_labels,
)
from .recurrent import AttentionPool, RecurrentEncoder

__all__ = [
    "AdapterEncoding",
    "AdapterUnavailableError",
    "AttentionPool",
    "ConvolutionalEncoder",
    "EncoderConfig",
    "HuggingFaceAdapter",
    "PretrainedAdapter",
    "RecurrentEncoder",
    "SequenceEncoding",
    "encode_pretrained",
    "load_word_vectors",
    "propagate_word_labels",
]
