"""Paper record ingestion, primary-branch selection and dataset splitting."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

RELEVANCE_SCORES = (100, 300, 500)


@dataclass(frozen=True)
class CategoryAssignment:
    """One author-assigned branch: a root-to-node topic chain plus relevance."""

    path: tuple[str, ...]
    relevance: int


@dataclass(frozen=True)
class PaperRecord:
    id: str
    title: str
    abstract: str
    keywords: tuple[str, ...]
    assignments: tuple[CategoryAssignment, ...]


@dataclass
class IngestReport:
    """Surviving records plus what was dropped along the way and why."""

    records: list[PaperRecord]
    dropped_no_keywords: int = 0
    dropped_no_categories: int = 0
    malformed: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n_surviving(self) -> int:
        return len(self.records)


def read_corpus_jsonl(path) -> Iterator[dict]:
    """Yield parsed objects from a one-record-per-line JSON corpus file.

    Unparseable lines come through as ``{"_parse_error": ...}`` so that
    ingest can report them by line number without aborting the stream.
    """
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                yield {"_parse_error": str(exc)}


def ingest(raw_records: Iterable[Mapping]) -> IngestReport:
    """Filter a raw record stream down to fully usable paper records.

    Records missing author keywords or category assignments are dropped
    (counted separately); records missing id/title/abstract or carrying
    unusable category structures are reported as malformed with their
    1-based position in the stream. Processing always continues.
    """
    report = IngestReport(records=[])
    for line_no, raw in enumerate(raw_records, start=1):
        if "_parse_error" in raw:
            report.malformed.append((line_no, f"unparseable line: {raw['_parse_error']}"))
            continue
        problem = _structural_problem(raw)
        if problem:
            report.malformed.append((line_no, problem))
            continue
        keywords = tuple(k for k in raw.get("keywords") or [] if str(k).strip())
        if not keywords:
            report.dropped_no_keywords += 1
            continue
        assignments = _parse_assignments(raw.get("categories") or [])
        if assignments is None:
            report.malformed.append((line_no, "invalid category assignment structure"))
            continue
        if not assignments:
            report.dropped_no_categories += 1
            continue
        report.records.append(
            PaperRecord(
                id=str(raw["id"]),
                title=raw["title"],
                abstract=raw["abstract"],
                keywords=keywords,
                assignments=assignments,
            )
        )
    return report


def _structural_problem(raw: Mapping) -> str | None:
    for key in ("id", "title", "abstract"):
        if key not in raw or raw[key] is None:
            return f"missing field {key!r}"
    if not isinstance(raw["title"], str) or not isinstance(raw["abstract"], str):
        return "title/abstract must be strings"
    return None


def _parse_assignments(entries) -> tuple[CategoryAssignment, ...] | None:
    if not isinstance(entries, list):
        return None
    assignments = []
    for entry in entries:
        if not isinstance(entry, Mapping):
            return None
        path = entry.get("path")
        relevance = entry.get("relevance")
        if not isinstance(path, list) or not path:
            return None
        if relevance not in RELEVANCE_SCORES:
            return None
        assignments.append(CategoryAssignment(path=tuple(str(p) for p in path), relevance=int(relevance)))
    return tuple(assignments)


def select_primary_branch(record: PaperRecord) -> CategoryAssignment:
    """The assignment with the highest relevance score; ties keep the
    first occurrence in the record."""
    if not record.assignments:
        raise ValueError(f"record {record.id!r} has no category assignments")
    return max(record.assignments, key=lambda a: a.relevance)


@dataclass
class DatasetSplit:
    """Train/dev/test partition of records or encoded examples."""

    train: list
    dev: list
    test: list
    split_seed: int

    def subsets(self) -> dict[str, list]:
        return {"train": self.train, "dev": self.dev, "test": self.test}

    def __len__(self) -> int:
        return len(self.train) + len(self.dev) + len(self.test)


def split_sizes(n: int) -> tuple[int, int, int]:
    """80:10:10 with dev and test floored; the remainder goes to train."""
    held = n // 10
    return n - 2 * held, held, held


def split(records: Sequence, seed: int) -> DatasetSplit:
    """Deterministic seeded shuffle followed by the 80:10:10 floor rule."""
    if not records:
        raise ValueError("cannot split an empty record list")
    order = list(records)
    random.Random(seed).shuffle(order)
    n_train, n_dev, _ = split_sizes(len(order))
    return DatasetSplit(
        train=order[:n_train],
        dev=order[n_train : n_train + n_dev],
        test=order[n_train + n_dev :],
        split_seed=seed,
    )


def split_manifest(dataset: DatasetSplit, id_of=lambda r: r.id) -> dict:
    return {
        "seed": dataset.split_seed,
        "train": [id_of(r) for r in dataset.train],
        "dev": [id_of(r) for r in dataset.dev],
        "test": [id_of(r) for r in dataset.test],
    }


def save_manifest(manifest: dict, path) -> None:
    Path(path).write_text(json.dumps(manifest, sort_keys=True), encoding="utf-8")
