"""Dataset preparation: from raw corpus + taxonomy files to encoded shards.

The prepared directory is self-contained and deterministic under the split
seed (re-running with identical inputs writes byte-identical artifacts):

    prepared/
      prepare.json    options, drop counts, exclusion counts
      manifest.json   {"seed", "train": [id], "dev": [id], "test": [id]}
      taxonomy.json   the truncated+pruned tree actually used
      vocab.json      classical mode only
      train.jsonl / dev.jsonl / test.jsonl   encoded shards
      stats.json      per-topic (train, dev, test) positive counts

Shards store the text-plus-keywords superset; narrower input modes slice
it at batch time, which is also how keywords-at-training-only inference
drops the keyword segment.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus.encoding import (
    MAX_KEYWORD_TOKENS,
    MAX_TEXT_TOKENS,
    EncodedExample,
    WordExample,
    closed_label_vector,
    encode_records,
    encode_word_examples,
    label_distribution,
)
from .corpus.preprocessing import Vocabulary, build_vocabulary, preprocess
from .corpus.records import DatasetSplit, ingest, read_corpus_jsonl, split
from .taxonomy import (
    TaxonomyTree,
    load_taxonomy,
    prune_by_support,
    serialize_taxonomy,
    training_order,
    truncate_to_level,
)

PREPARE_MODES = ("classical", "pretrained-adapter")


@dataclass
class PrepareSummary:
    out_dir: Path
    n_ingested: int
    n_encoded: dict[str, int]
    n_excluded: dict[str, int]
    n_topics: int

    @property
    def total_encoded(self) -> int:
        return sum(self.n_encoded.values())


def count_train_support(train_records, tree: TaxonomyTree) -> Counter:
    """Training-set positive count per topic under ancestor closure."""
    topics = training_order(tree)
    counts: Counter = Counter()
    for record in train_records:
        y = closed_label_vector(record, tree, topics)
        if y is None:
            continue
        for i in np.flatnonzero(y):
            counts[topics[i]] += 1
    return counts


def prepare_dataset(
    corpus_path,
    taxonomy_path,
    out_dir,
    *,
    level: int = 2,
    min_support: int = 100,
    seed: int = 0,
    mode: str = "classical",
    max_text_tokens: int = MAX_TEXT_TOKENS,
    max_keyword_tokens: int = MAX_KEYWORD_TOKENS,
    min_token_count: int = 2,
) -> PrepareSummary:
    """Ingest, truncate, prune, split, build vocabulary and encode.

    Truncation happens before support counting, and support is counted on
    the training split only, so the prepared topic set never leaks dev or
    test information.
    """
    if mode not in PREPARE_MODES:
        raise ValueError(f"unknown prepare mode: {mode!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    report = ingest(read_corpus_jsonl(corpus_path))
    if not report.records:
        raise ValueError("no usable records survived ingestion")

    tree = truncate_to_level(load_taxonomy(taxonomy_path), level)
    dataset = split(report.records, seed)
    support = count_train_support(dataset.train, tree)
    tree = prune_by_support(tree, support, min_support)
    if tree.n == 0:
        raise ValueError("every topic was pruned; lower min_support or check the corpus")
    topics = training_order(tree)

    vocab = None
    if mode == "classical":
        tokens = _training_token_stream(dataset.train)
        vocab = build_vocabulary(tokens, min_count=min_token_count)

    budgets = dict(max_text_tokens=max_text_tokens, max_keyword_tokens=max_keyword_tokens)
    encoded: dict[str, list] = {}
    excluded: dict[str, int] = {}
    for name, records in dataset.subsets().items():
        if mode == "classical":
            encoded[name], excluded[name] = encode_records(
                records, tree, vocab, "text-plus-keywords", topics=topics, **budgets
            )
        else:
            encoded[name], excluded[name] = encode_word_examples(
                records, tree, "text-plus-keywords", topics=topics, **budgets
            )

    manifest = {
        "seed": seed,
        "train": [ex.id for ex in encoded["train"]],
        "dev": [ex.id for ex in encoded["dev"]],
        "test": [ex.id for ex in encoded["test"]],
    }
    _write_json(out_dir / "manifest.json", manifest)
    _write_json(out_dir / "taxonomy.json", serialize_taxonomy(tree))
    if vocab is not None:
        _write_json(out_dir / "vocab.json", vocab.to_json())

    for name, examples in encoded.items():
        with open(out_dir / f"{name}.jsonl", "w", encoding="utf-8") as handle:
            for example in examples:
                handle.write(json.dumps(_example_to_json(example, mode), sort_keys=True) + "\n")

    stats_split = DatasetSplit(
        train=encoded["train"], dev=encoded["dev"], test=encoded["test"], split_seed=seed
    )
    distribution = label_distribution(stats_split, tree)
    _write_json(
        out_dir / "stats.json",
        {t: {"train": c[0], "dev": c[1], "test": c[2]} for t, c in distribution.items()},
    )

    _write_json(
        out_dir / "prepare.json",
        {
            "mode": mode,
            "level": level,
            "min_support": min_support,
            "seed": seed,
            "max_text_tokens": max_text_tokens,
            "max_keyword_tokens": max_keyword_tokens,
            "min_token_count": min_token_count,
            "n_ingested": report.n_surviving,
            "dropped_no_keywords": report.dropped_no_keywords,
            "dropped_no_categories": report.dropped_no_categories,
            "n_malformed": len(report.malformed),
            "n_excluded_pruned_branch": excluded,
            "n_topics": tree.n,
        },
    )

    return PrepareSummary(
        out_dir=out_dir,
        n_ingested=report.n_surviving,
        n_encoded={k: len(v) for k, v in encoded.items()},
        n_excluded=excluded,
        n_topics=tree.n,
    )


def _training_token_stream(records):
    for record in records:
        yield from preprocess(record.title + " " + record.abstract)
        for keyword in record.keywords:
            yield from preprocess(keyword)


def _example_to_json(example, mode: str) -> dict:
    if mode == "classical":
        return {
            "id": example.id,
            "x": list(example.x),
            "text_len": example.text_len,
            "y": [int(i) for i in np.flatnonzero(example.y)],
            "z": [int(i) for i in np.flatnonzero(example.z)],
        }
    return {
        "id": example.id,
        "words": list(example.words),
        "kw_words": list(example.keyword_words),
        "y": [int(i) for i in np.flatnonzero(example.y)],
        "z": [int(i) for i in np.flatnonzero(example.z)],
    }


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


@dataclass
class PreparedDataset:
    """Loaded view of a prepared directory."""

    tree: TaxonomyTree
    topics: list[str]
    vocab: Vocabulary | None
    data: DatasetSplit
    mode: str
    options: dict

    @classmethod
    def load(cls, prepared_dir) -> "PreparedDataset":
        prepared_dir = Path(prepared_dir)
        options = json.loads((prepared_dir / "prepare.json").read_text(encoding="utf-8"))
        mode = options["mode"]
        tree = load_taxonomy(prepared_dir / "taxonomy.json")
        topics = training_order(tree)
        vocab = None
        if (prepared_dir / "vocab.json").exists():
            vocab = Vocabulary.load(prepared_dir / "vocab.json")
        subsets = {}
        for name in ("train", "dev", "test"):
            subsets[name] = [
                _example_from_json(json.loads(line), len(topics), mode)
                for line in (prepared_dir / f"{name}.jsonl").read_text(encoding="utf-8").splitlines()
                if line
            ]
        manifest = json.loads((prepared_dir / "manifest.json").read_text(encoding="utf-8"))
        data = DatasetSplit(
            train=subsets["train"], dev=subsets["dev"], test=subsets["test"], split_seed=manifest["seed"]
        )
        return cls(tree=tree, topics=topics, vocab=vocab, data=data, mode=mode, options=options)

    def gold_matrix(self, subset: str) -> np.ndarray:
        examples = self.data.subsets()[subset]
        if not examples:
            return np.zeros((0, len(self.topics)), dtype=np.int8)
        return np.stack([ex.y for ex in examples])


def _example_from_json(payload: dict, n_topics: int, mode: str):
    y = np.zeros(n_topics, dtype=np.int8)
    y[payload["y"]] = 1
    if mode == "classical":
        z = np.zeros(payload["text_len"], dtype=np.int8)
        z[payload["z"]] = 1
        return EncodedExample(
            id=payload["id"], x=list(payload["x"]), text_len=payload["text_len"], y=y, z=z
        )
    z = np.zeros(len(payload["words"]), dtype=np.int8)
    z[payload["z"]] = 1
    return WordExample(
        id=payload["id"],
        words=list(payload["words"]),
        keyword_words=list(payload["kw_words"]),
        y=y,
        z=z,
    )
