"""Turning paper records into model-ready examples with closed label vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..taxonomy import TaxonomyTree, expand_labels, training_order
from .preprocessing import Vocabulary, preprocess
from .records import DatasetSplit, PaperRecord, select_primary_branch

MAX_TEXT_TOKENS = 100
MAX_KEYWORD_TOKENS = 15

INPUT_MODES = ("text-only", "text-plus-keywords", "keywords-only")


@dataclass
class EncodedExample:
    """Tokenized input, closed topic label vector and keyword labels.

    ``x`` holds the title+abstract tokens first (``text_len`` of them),
    optionally followed by the keyword tokens; ``z`` marks which of the
    text tokens lie inside a verbatim occurrence of an author keyword.
    """

    id: str
    x: list[int]
    text_len: int
    y: np.ndarray
    z: np.ndarray

    @property
    def keyword_segment(self) -> list[int]:
        return self.x[self.text_len :]

    def input_ids(self, use_keywords: bool = True) -> list[int]:
        """Token ids fed to the model; dropping the keyword segment is how
        keywords-at-training-only inference works."""
        return self.x if use_keywords else self.x[: self.text_len]

    def inputs_for(self, input_mode: str, use_keywords: bool = True) -> list[int]:
        """Slice the stored superset for a narrower input mode.

        Positional conventions are preserved: the text segment always
        starts at position zero, so dropping keywords never shifts the
        keyword-label alignment.
        """
        if input_mode == "keywords-only":
            return self.keyword_segment
        if input_mode == "text-only" or not use_keywords:
            return self.x[: self.text_len]
        return self.x


def label_keywords(tokens: Sequence[str], keywords: Iterable[Sequence[str]]) -> np.ndarray:
    """Mark every token position covered by a contiguous keyword occurrence.

    All occurrences of all keywords are marked and overlaps union. Tokens
    and keywords must have been preprocessed identically; empty keyword
    token sequences are ignored.
    """
    labels = np.zeros(len(tokens), dtype=np.int8)
    sequences = {tuple(k) for k in keywords if len(k) > 0}
    if not sequences or not tokens:
        return labels
    starts: dict[str, list[int]] = {}
    for i, tok in enumerate(tokens):
        starts.setdefault(tok, []).append(i)
    for seq in sequences:
        width = len(seq)
        for start in starts.get(seq[0], ()):
            if start + width <= len(tokens) and tuple(tokens[start : start + width]) == seq:
                labels[start : start + width] = 1
    return labels


def closed_label_vector(
    record: PaperRecord, tree: TaxonomyTree, topics: Sequence[str]
) -> np.ndarray | None:
    """Binary label vector for the record's primary branch, closed over
    ancestors and restricted to the prepared tree.

    Returns None when no topic of the branch survives in the tree.
    """
    primary = select_primary_branch(record)
    surviving = [t for t in primary.path if t in tree]
    if not surviving:
        return None
    positive: set[str] = set()
    for topic in surviving:
        positive |= expand_labels(tree, topic)
    column = {t: i for i, t in enumerate(topics)}
    y = np.zeros(len(topics), dtype=np.int8)
    for topic in positive:
        y[column[topic]] = 1
    return y


def encode_example(
    record: PaperRecord,
    tree: TaxonomyTree,
    vocab: Vocabulary,
    input_mode: str = "text-plus-keywords",
    *,
    topics: Sequence[str] | None = None,
    max_text_tokens: int = MAX_TEXT_TOKENS,
    max_keyword_tokens: int = MAX_KEYWORD_TOKENS,
) -> EncodedExample | None:
    """Encode one record, or None when its branch was pruned away entirely.

    Keyword labels are always computed from the full tokenized keywords
    against the (possibly truncated) title+abstract tokens, regardless of
    whether the keyword tokens are part of the model input.
    """
    if input_mode not in INPUT_MODES:
        raise ValueError(f"unknown input mode: {input_mode!r}")
    if topics is None:
        topics = training_order(tree)

    y = closed_label_vector(record, tree, topics)
    if y is None:
        return None

    text_tokens = preprocess(record.title + " " + record.abstract)[:max_text_tokens]
    keyword_token_lists = [preprocess(k) for k in record.keywords]

    keyword_tokens: list[str] = []
    for toks in keyword_token_lists:
        for tok in toks:
            if len(keyword_tokens) >= max_keyword_tokens:
                break
            keyword_tokens.append(tok)

    if input_mode == "keywords-only":
        x_tokens: list[str] = list(keyword_tokens)
        text_len = 0
        z = np.zeros(0, dtype=np.int8)
    else:
        z = label_keywords(text_tokens, keyword_token_lists)
        text_len = len(text_tokens)
        x_tokens = list(text_tokens)
        if input_mode == "text-plus-keywords":
            x_tokens += keyword_tokens

    return EncodedExample(
        id=record.id,
        x=vocab.encode(x_tokens),
        text_len=text_len,
        y=y,
        z=z,
    )


def encode_records(
    records: Iterable[PaperRecord],
    tree: TaxonomyTree,
    vocab: Vocabulary,
    input_mode: str = "text-plus-keywords",
    **kwargs,
) -> tuple[list[EncodedExample], int]:
    """Bulk encode; returns the examples plus the count of records excluded
    because their primary branch no longer intersects the tree."""
    topics = kwargs.pop("topics", None) or training_order(tree)
    encoded = []
    excluded = 0
    for record in records:
        example = encode_example(record, tree, vocab, input_mode, topics=topics, **kwargs)
        if example is None:
            excluded += 1
        else:
            encoded.append(example)
    return encoded, excluded


@dataclass
class WordExample:
    """Word-level example for pretrained-adapter encoders.

    The adapter's subword tokenizer runs at batch time; until then the
    example keeps lowercased words plus word-level keyword labels that get
    propagated to subwords.
    """

    id: str
    words: list[str]
    keyword_words: list[str]
    y: np.ndarray
    z: np.ndarray

    def input_words(self, use_keywords: bool = True) -> list[str]:
        return self.words + self.keyword_words if use_keywords else list(self.words)

    def inputs_for(self, input_mode: str, use_keywords: bool = True) -> list[str]:
        if input_mode == "keywords-only":
            return list(self.keyword_words)
        if input_mode == "text-only" or not use_keywords:
            return list(self.words)
        return self.words + self.keyword_words


def encode_word_example(
    record: PaperRecord,
    tree: TaxonomyTree,
    input_mode: str = "text-plus-keywords",
    *,
    topics: Sequence[str] | None = None,
    max_text_tokens: int = MAX_TEXT_TOKENS,
    max_keyword_tokens: int = MAX_KEYWORD_TOKENS,
) -> WordExample | None:
    """Word-level counterpart of encode_example (pretrained-adapter mode)."""
    if input_mode not in INPUT_MODES:
        raise ValueError(f"unknown input mode: {input_mode!r}")
    if topics is None:
        topics = training_order(tree)
    y = closed_label_vector(record, tree, topics)
    if y is None:
        return None

    words = preprocess(record.title + " " + record.abstract, mode="pretrained-adapter")
    words = words[:max_text_tokens]
    keyword_lists = [preprocess(k, mode="pretrained-adapter") for k in record.keywords]
    keyword_words: list[str] = []
    for toks in keyword_lists:
        for tok in toks:
            if len(keyword_words) >= max_keyword_tokens:
                break
            keyword_words.append(tok)

    if input_mode == "keywords-only":
        return WordExample(
            id=record.id, words=[], keyword_words=keyword_words, y=y, z=np.zeros(0, dtype=np.int8)
        )
    z = label_keywords(words, keyword_lists)
    if input_mode == "text-only":
        keyword_words = []
    return WordExample(id=record.id, words=words, keyword_words=keyword_words, y=y, z=z)


def encode_word_examples(
    records: Iterable[PaperRecord],
    tree: TaxonomyTree,
    input_mode: str = "text-plus-keywords",
    **kwargs,
) -> tuple[list[WordExample], int]:
    topics = kwargs.pop("topics", None) or training_order(tree)
    encoded = []
    excluded = 0
    for record in records:
        example = encode_word_example(record, tree, input_mode, topics=topics, **kwargs)
        if example is None:
            excluded += 1
        else:
            encoded.append(example)
    return encoded, excluded


def violates_closure(example: EncodedExample, tree: TaxonomyTree, topics: Sequence[str]) -> bool:
    """True when some positive label's parent bit is missing."""
    column = {t: i for i, t in enumerate(topics)}
    for topic, col in column.items():
        if example.y[col]:
            parent = tree.node(topic).parent
            if parent != tree.root_id and not example.y[column[parent]]:
                return True
    return False


def label_distribution(
    dataset: DatasetSplit, tree: TaxonomyTree
) -> dict[str, tuple[int, int, int]]:
    """Per-topic positive example counts as (train, dev, test)."""
    topics = training_order(tree)
    totals = {}
    counts = {
        name: np.sum([ex.y for ex in subset], axis=0) if subset else np.zeros(len(topics))
        for name, subset in dataset.subsets().items()
    }
    for i, topic in enumerate(topics):
        totals[topic] = (
            int(counts["train"][i]),
            int(counts["dev"][i]),
            int(counts["test"][i]),
        )
    return totals
