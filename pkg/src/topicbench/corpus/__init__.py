"""Corpus ingestion, preprocessing, encoding and synthetic data generation."""

from .encoding import (
    INPUT_MODES,
    MAX_KEYWORD_TOKENS,
    MAX_TEXT_TOKENS,
    EncodedExample,
    WordExample,
    closed_label_vector,
    encode_example,
    encode_records,
    encode_word_example,
    encode_word_examples,
    label_distribution,
    label_keywords,
    violates_closure,
)
from .preprocessing import Vocabulary, build_vocabulary, porter_stem, preprocess
from .records import (
    CategoryAssignment,
    DatasetSplit,
    IngestReport,
    PaperRecord,
    ingest,
    read_corpus_jsonl,
    save_manifest,
    select_primary_branch,
    split,
    split_manifest,
    split_sizes,
)
from .synthetic import SynthConfig, generate_synthetic, write_corpus_jsonl, write_taxonomy_json

__all__ = [
    "INPUT_MODES",
    "MAX_KEYWORD_TOKENS",
    "MAX_TEXT_TOKENS",
    "CategoryAssignment",
    "DatasetSplit",
    "EncodedExample",
    "IngestReport",
    "PaperRecord",
    "SynthConfig",
    "Vocabulary",
    "WordExample",
    "build_vocabulary",
    "closed_label_vector",
    "encode_example",
    "encode_records",
    "encode_word_example",
    "encode_word_examples",
    "generate_synthetic",
    "ingest",
    "label_distribution",
    "label_keywords",
    "porter_stem",
    "preprocess",
    "read_corpus_jsonl",
    "save_manifest",
    "select_primary_branch",
    "split",
    "split_manifest",
    "split_sizes",
    "violates_closure",
    "write_corpus_jsonl",
    "write_taxonomy_json",
]
