import zlib

import pytest
import torch
from torch import nn


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call" and outcome != "skipped":
                continue
            if "test_acceptance.py::test_criterion" in report.nodeid:
                name = report.nodeid.split("::")[-1]
                lines.append((name, outcome.upper()))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in sorted(set(lines)):
            terminalreporter.write_line(f"{outcome:8} {name}")

from topicbench.corpus import (
    SynthConfig,
    build_vocabulary,
    encode_records,
    generate_synthetic,
    ingest,
    preprocess,
    split,
)
from topicbench.corpus.records import DatasetSplit
from topicbench.encoders.pretrained import AdapterEncoding, PretrainedAdapter
from topicbench.taxonomy import load_taxonomy

STUB_VOCAB = 512
STUB_CLS = 1


class _StubBackbone(nn.Module):
    def __init__(self, dim):
        super().__init__()
        self.embedding = nn.Embedding(STUB_VOCAB, dim, padding_idx=0)
        self.mix = nn.Linear(dim, dim)

    def forward(self, ids, mask):
        states = torch.tanh(self.mix(self.embedding(ids)))
        weights = mask.to(states.dtype)
        summary = (states * weights.unsqueeze(-1)).sum(1) / weights.sum(1, keepdim=True)
        return states, summary


class StubAdapter(PretrainedAdapter):
    """Offline stand-in honoring the pretrained-adapter contract.

    Words split into <=3-character pieces; piece ids come from a stable
    hash so encodings are deterministic across processes.
    """

    name = "stub"

    def __init__(self, dim=32, seed=0):
        self.dim = dim
        torch.manual_seed(seed)
        self._module = _StubBackbone(dim)

    @staticmethod
    def _pieces(word):
        return [word[i : i + 3] for i in range(0, len(word), 3)] or [word]

    def tokenize_words(self, words):
        ids = [STUB_CLS]
        word_ids = [None]
        for w_index, word in enumerate(words):
            for piece in self._pieces(word):
                ids.append(2 + zlib.crc32(piece.encode()) % (STUB_VOCAB - 2))
                word_ids.append(w_index)
        return ids, word_ids

    def torch_module(self):
        return self._module

    def encode(self, text):
        words = text.lower().split()
        ids, word_ids = self.tokenize_words(words)
        id_tensor = torch.tensor([ids], dtype=torch.long)
        mask = torch.ones_like(id_tensor, dtype=torch.bool)
        self._module.eval()
        with torch.no_grad():
            states, summary = self._module(id_tensor, mask)
        pieces = [p for w in words for p in self._pieces(w)]
        return AdapterEncoding(
            subword_tokens=["[CLS]"] + pieces,
            word_ids=word_ids,
            token_vectors=states[0],
            summary=summary[0],
        )


@pytest.fixture
def stub_adapter():
    return StubAdapter()


@pytest.fixture(scope="session")
def tiny_corpus():
    """Small synthetic corpus encoded end to end, shared by training tests."""
    config = SynthConfig(docs_per_leaf=30, parents=2, children_per_parent=2)
    records, taxonomy = generate_synthetic(config, seed=13)
    tree = load_taxonomy(taxonomy)
    dataset = split(ingest(records).records, seed=3)
    tokens = []
    for record in dataset.train:
        tokens += preprocess(record.title + " " + record.abstract)
        for keyword in record.keywords:
            tokens += preprocess(keyword)
    vocab = build_vocabulary(tokens)
    encoded = DatasetSplit(
        train=encode_records(dataset.train, tree, vocab)[0],
        dev=encode_records(dataset.dev, tree, vocab)[0],
        test=encode_records(dataset.test, tree, vocab)[0],
        split_seed=dataset.split_seed,
    )
    return tree, encoded, vocab
