"""Text normalization, tokenization, stemming and vocabulary construction.

Classical (recurrent/convolutional) models consume lowercased,
punctuation-free, Porter-stemmed tokens with rare words masked to an
unknown marker. Pretrained-adapter models only lowercase and split on
whitespace; subword tokenization belongs to the encoder adapter.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)

_VOWELS = "aeiou"


def _is_consonant(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequences in [C](VC)^m[V]."""
    m = 0
    i = 0
    n = len(stem)
    while i < n and _is_consonant(stem, i):
        i += 1
    while i < n:
        while i < n and not _is_consonant(stem, i):
            i += 1
        if i >= n:
            break
        m += 1
        while i < n and _is_consonant(stem, i):
            i += 1
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_consonant(stem, i) for i in range(len(stem)))


def _ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_consonant(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    return (
        _is_consonant(word, len(word) - 3)
        and not _is_consonant(word, len(word) - 2)
        and _is_consonant(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


_STEP2 = [
    ("ational", "ate"), ("ization", "ize"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("biliti", "ble"), ("tional", "tion"), ("entli", "ent"),
    ("ousli", "ous"), ("aliti", "al"), ("iviti", "ive"), ("ation", "ate"),
    ("alism", "al"), ("enci", "ence"), ("anci", "ance"), ("izer", "ize"),
    ("abli", "able"), ("alli", "al"), ("ator", "ate"), ("eli", "e"),
]

_STEP3 = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4 = [
    "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ion",
    "ism", "ate", "iti", "ous", "ive", "ize", "al", "er", "ic", "ou",
]


def porter_stem(word: str) -> str:
    """Suffix-stripping stemmer following the original Porter algorithm.

    Words of length <= 2 are returned unchanged.
    """
    if len(word) <= 2:
        return word

    # step 1a
    if word.endswith("sses"):
        word = word[:-2]
    elif word.endswith("ies"):
        word = word[:-2]
    elif word.endswith("ss"):
        pass
    elif word.endswith("s"):
        word = word[:-1]

    # step 1b
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            word = word[:-1]
    else:
        stripped = None
        if word.endswith("ed") and _has_vowel(word[:-2]):
            stripped = word[:-2]
        elif word.endswith("ing") and _has_vowel(word[:-3]):
            stripped = word[:-3]
        if stripped is not None:
            word = stripped
            if word.endswith(("at", "bl", "iz")):
                word += "e"
            elif _ends_double_consonant(word) and word[-1] not in "lsz":
                word = word[:-1]
            elif _measure(word) == 1 and _ends_cvc(word):
                word += "e"

    # step 1c
    if word.endswith("y") and _has_vowel(word[:-1]):
        word = word[:-1] + "i"

    # step 2
    for suffix, replacement in _STEP2:
        if word.endswith(suffix):
            base = word[: -len(suffix)]
            if _measure(base) > 0:
                word = base + replacement
            break

    # step 3
    for suffix, replacement in _STEP3:
        if word.endswith(suffix):
            base = word[: -len(suffix)]
            if _measure(base) > 0:
                word = base + replacement
            break

    # step 4
    for suffix in _STEP4:
        if word.endswith(suffix):
            base = word[: -len(suffix)]
            if _measure(base) > 1 and (suffix != "ion" or base.endswith(("s", "t"))):
                word = base
            break

    # step 5a
    if word.endswith("e"):
        base = word[:-1]
        m = _measure(base)
        if m > 1 or (m == 1 and not _ends_cvc(base)):
            word = base

    # step 5b
    if _measure(word) > 1 and _ends_double_consonant(word) and word.endswith("l"):
        word = word[:-1]

    return word


def preprocess(text: str, mode: str = "classical") -> list[str]:
    """Turn raw text into the token list a given encoder family consumes.

    classical: lowercase, strip punctuation, word-tokenize, Porter-stem.
    pretrained-adapter: lowercase and split on whitespace; the adapter's
    own subword tokenizer does the rest.
    """
    if mode == "classical":
        return [porter_stem(tok) for tok in _WORD_RE.findall(text.lower())]
    if mode == "pretrained-adapter":
        return text.lower().split()
    raise ValueError(f"unknown preprocessing mode: {mode!r}")


@dataclass(frozen=True)
class Vocabulary:
    """Token-to-index map with reserved padding and unknown-marker slots."""

    index: dict[str, int]
    pad_index: int = 0
    unk_index: int = 1

    def id(self, token: str) -> int:
        return self.index.get(token, self.unk_index)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.index.get(tok, self.unk_index) for tok in tokens]

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __len__(self) -> int:
        """Total table size including the two reserved slots."""
        return len(self.index) + 2

    def content_hash(self) -> str:
        payload = json.dumps(sorted(self.index.items())).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def to_json(self) -> dict:
        return {"pad_index": self.pad_index, "unk_index": self.unk_index, "index": self.index}

    @classmethod
    def from_json(cls, payload: dict) -> "Vocabulary":
        return cls(
            index=dict(payload["index"]),
            pad_index=payload["pad_index"],
            unk_index=payload["unk_index"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocabulary(train_tokens: Iterable[str], min_count: int = 2) -> Vocabulary:
    """Index tokens seen at least ``min_count`` times in the training stream.

    Everything else maps to the unknown marker at encode time. Must only
    ever see training-split text so that dev/test stay unseen.
    """
    counts = Counter(train_tokens)
    kept = sorted(tok for tok, c in counts.items() if c >= min_count)
    index = {tok: i + 2 for i, tok in enumerate(kept)}
    return Vocabulary(index=index)
