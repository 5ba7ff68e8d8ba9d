"""Synthetic corpus and taxonomy generator for end-to-end integration runs.

Documents are separable by construction: each topic owns a pool of
indicator tokens that only appears in documents labeled with it, and
author keywords are planted verbatim in the text from a dedicated keyword
token pool. Output is deterministic under the seed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class SynthConfig:
    parents: int = 3
    children_per_parent: int = 3
    docs_per_leaf: int = 100
    filler_vocab_size: int = 150
    indicator_pool_size: int = 6
    indicators_per_doc: int = 4
    filler_range: tuple[int, int] = (8, 16)
    keyword_vocab_size: int = 24
    keywords_per_doc: tuple[int, int] = (1, 3)
    keyword_phrase_len: tuple[int, int] = (1, 3)
    secondary_assignment_rate: float = 0.25
    root_id: str = "root"

    def validate(self) -> None:
        if self.parents < 1 or self.children_per_parent < 1:
            raise ValueError("synthetic taxonomy needs at least one parent and one child")
        if self.docs_per_leaf < 1:
            raise ValueError("docs_per_leaf must be positive")

    @property
    def n_topics(self) -> int:
        return self.parents * (1 + self.children_per_parent)

    @property
    def n_docs(self) -> int:
        return self.parents * self.children_per_parent * self.docs_per_leaf


def _parent_id(p: int) -> str:
    return f"area{p}"


def _leaf_id(p: int, c: int) -> str:
    return f"area{p}.leaf{c}"


def generate_synthetic(config: SynthConfig, seed: int) -> tuple[list[dict], list[dict]]:
    """Build (corpus records, taxonomy records) ready for JSON serialization."""
    config.validate()
    rng = random.Random(seed)

    taxonomy = [{"id": config.root_id, "name": config.root_id, "parent": None}]
    leaves = []
    for p in range(config.parents):
        taxonomy.append({"id": _parent_id(p), "name": _parent_id(p), "parent": config.root_id})
        for c in range(config.children_per_parent):
            taxonomy.append({"id": _leaf_id(p, c), "name": _leaf_id(p, c), "parent": _parent_id(p)})
            leaves.append((p, c))

    filler = [f"w{i:03d}" for i in range(config.filler_vocab_size)]
    keyword_pool = [f"kw{i:02d}" for i in range(config.keyword_vocab_size)]
    indicators = {
        _parent_id(p): [f"area{p}x{i}" for i in range(config.indicator_pool_size)]
        for p in range(config.parents)
    }
    indicators.update(
        {
            _leaf_id(p, c): [f"leaf{p}{c}x{i}" for i in range(config.indicator_pool_size)]
            for p, c in leaves
        }
    )

    records = []
    doc_no = 0
    for p, c in leaves:
        for _ in range(config.docs_per_leaf):
            records.append(_make_record(config, rng, p, c, doc_no, filler, keyword_pool, indicators))
            doc_no += 1
    return records, taxonomy


def _make_record(config, rng, p, c, doc_no, filler, keyword_pool, indicators):
    tokens = []
    tokens += rng.choices(indicators[_parent_id(p)], k=config.indicators_per_doc)
    tokens += rng.choices(indicators[_leaf_id(p, c)], k=config.indicators_per_doc)
    tokens += rng.choices(filler, k=rng.randint(*config.filler_range))
    rng.shuffle(tokens)

    # Phrases are planted at gaps of the base token list (never inside one
    # another) so every listed keyword occurs contiguously in the text.
    keywords = []
    plants = []
    for _ in range(rng.randint(*config.keywords_per_doc)):
        phrase = rng.sample(keyword_pool, rng.randint(*config.keyword_phrase_len))
        keywords.append(" ".join(phrase))
        plants.append((rng.randint(0, len(tokens)), phrase))
    for at, phrase in sorted(plants, key=lambda item: item[0], reverse=True):
        tokens[at:at] = phrase

    assignments = [{"path": [_parent_id(p), _leaf_id(p, c)], "relevance": 500}]
    if rng.random() < config.secondary_assignment_rate:
        other_p = rng.randrange(config.parents)
        other_c = rng.randrange(config.children_per_parent)
        secondary = {"path": [_parent_id(other_p), _leaf_id(other_p, other_c)], "relevance": rng.choice([100, 300])}
        if rng.random() < 0.5:
            assignments.insert(0, secondary)
        else:
            assignments.append(secondary)

    return {
        "id": f"doc{doc_no:05d}",
        "title": " ".join(tokens[:3]),
        "abstract": " ".join(tokens[3:]),
        "keywords": keywords,
        "categories": assignments,
    }


def write_corpus_jsonl(records: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def write_taxonomy_json(taxonomy: list[dict], path) -> None:
    Path(path).write_text(json.dumps(taxonomy, indent=2) + "\n", encoding="utf-8")
