"""Checkpoint payloads and the run directory layout.

A checkpoint is a single self-describing file: named parameter tensors
plus the model spec, the vocabulary hash it was trained against, and
provenance (which target, which parent initialization, best epoch/metric).

Run directory layout:
    runs/<run-id>/config.json
    runs/<run-id>/seeds/<seed>/checkpoints/<topic-or-flat>.ckpt
    runs/<run-id>/seeds/<seed>/thresholds.json
    runs/<run-id>/seeds/<seed>/log.jsonl
    runs/<run-id>/metrics.json
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import torch

from ..models import ModelSpec


@dataclass
class Checkpoint:
    state: dict[str, torch.Tensor]
    model_spec: ModelSpec
    vocab_hash: str | None
    provenance: dict
    init_state: dict[str, torch.Tensor] | None = None
    history: list[dict] = field(default_factory=list)

    @property
    def parent(self) -> str | None:
        return self.provenance.get("parent")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True))


def save_checkpoint(checkpoint: Checkpoint, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "model_spec": checkpoint.model_spec.to_json(),
        "vocab_hash": checkpoint.vocab_hash,
        "provenance": checkpoint.provenance,
        "history": checkpoint.history,
    }
    payload = {
        "state": checkpoint.state,
        "init_state": checkpoint.init_state,
        "meta_json": json.dumps(meta, sort_keys=True),
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        torch.save(payload, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> Checkpoint:
    payload = torch.load(path, weights_only=True)
    meta = json.loads(payload["meta_json"])
    return Checkpoint(
        state=payload["state"],
        model_spec=ModelSpec.from_json(meta["model_spec"]),
        vocab_hash=meta["vocab_hash"],
        provenance=meta["provenance"],
        init_state=payload.get("init_state"),
        history=meta.get("history", []),
    )


class RunDirectory:
    """Paths inside one experiment run; all writes are atomic replacements."""

    def __init__(self, root):
        self.root = Path(root)

    @property
    def config_path(self) -> Path:
        return self.root / "config.json"

    @property
    def metrics_path(self) -> Path:
        return self.root / "metrics.json"

    def seed_dir(self, seed: int) -> Path:
        return self.root / "seeds" / str(seed)

    def checkpoint_path(self, seed: int, target: str) -> Path:
        return self.seed_dir(seed) / "checkpoints" / f"{_safe_name(target)}.ckpt"

    def thresholds_path(self, seed: int) -> Path:
        return self.seed_dir(seed) / "thresholds.json"

    def log_path(self, seed: int) -> Path:
        return self.seed_dir(seed) / "log.jsonl"

    def seeds(self) -> list[int]:
        seeds_root = self.root / "seeds"
        if not seeds_root.is_dir():
            return []
        return sorted(int(p.name) for p in seeds_root.iterdir() if p.name.isdigit())

    def checkpoints(self, seed: int) -> dict[str, Path]:
        folder = self.seed_dir(seed) / "checkpoints"
        if not folder.is_dir():
            return {}
        return {p.stem: p for p in sorted(folder.glob("*.ckpt"))}

    def write_config(self, payload: dict) -> None:
        atomic_write_json(self.config_path, payload)

    def append_log(self, seed: int, records: list[dict]) -> None:
        path = self.log_path(seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record, sort_keys=True) + "\n")


def _safe_name(target: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in target)
