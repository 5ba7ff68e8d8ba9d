"""Declarative experiment configuration and the reference experiment grid."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus.encoding import INPUT_MODES
from .encoders import EncoderConfig
from .models import LossWeights
from .training.config import HIERARCHIES, TrainConfig

BERT_ADAPTER = "bert-base-uncased"
SCIBERT_ADAPTER = "allenai/scibert_scivocab_uncased"

FAMILIES = ("recurrent", "convolutional", "pretrained")

TRAINING_OVERRIDE_KEYS = {
    "learning_rate",
    "batch_size",
    "max_epochs",
    "patience",
    "pos_weight",
    "pos_weight_search",
    "pos_weight_candidates",
    "pos_weight_epochs",
    "record_init_snapshots",
}


class ConfigError(ValueError):
    """Invalid experiment configuration or command-line flags."""


@dataclass
class ExperimentConfig:
    corpus: str | None = None
    taxonomy: str | None = None
    prepared_dir: str | None = None
    run_dir: str | None = None
    level: int = 2
    min_support: int = 100
    split_seed: int = 0
    family: str = "recurrent"
    adapter_name: str | None = None
    embeddings: str | None = None
    hierarchy: str = "flat"
    input_mode: str = "text-plus-keywords"
    keywords_at_test: bool = True
    multitask: bool = False
    loss_weights: tuple[float, float] = (1.0, 1.0)
    seeds: tuple[int, ...] = (1, 2, 3)
    training: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.hierarchy not in HIERARCHIES:
            raise ConfigError(f"hierarchy must be one of {HIERARCHIES}, got {self.hierarchy!r}")
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.input_mode not in INPUT_MODES:
            raise ConfigError(f"input_mode must be one of {INPUT_MODES}, got {self.input_mode!r}")
        if self.multitask and self.input_mode == "keywords-only":
            raise ConfigError(
                "multitask keyword labeling is defined over title+abstract tokens; "
                "keywords-only input has none"
            )
        if not self.keywords_at_test and self.input_mode != "text-plus-keywords":
            raise ConfigError("keywords_at_test=false only makes sense with text-plus-keywords input")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.family == "pretrained" and not self.adapter_name:
            raise ConfigError("pretrained family requires adapter_name")
        unknown = set(self.training) - TRAINING_OVERRIDE_KEYS
        if unknown:
            raise ConfigError(f"unknown training overrides: {sorted(unknown)}")
        try:
            LossWeights(*self.loss_weights)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def encoder_config(self) -> EncoderConfig:
        if self.family == "pretrained":
            return EncoderConfig(family="pretrained", adapter_name=self.adapter_name)
        return EncoderConfig(family=self.family)

    def train_config(self, seed: int) -> TrainConfig:
        base = TrainConfig.reference_defaults(self.hierarchy, self.family, seed=seed)
        overrides = dict(self.training)
        if "pos_weight_candidates" in overrides:
            overrides["pos_weight_candidates"] = tuple(overrides["pos_weight_candidates"])
        return base.with_overrides(
            input_mode=self.input_mode,
            keywords_at_test=self.keywords_at_test,
            multitask=self.multitask,
            loss_weights=LossWeights(*self.loss_weights),
            **overrides,
        )

    def row_label(self) -> str:
        prefix = {"flat": "Flat", "hierarchical": "HR", "n-binary": "n-Binary"}[self.hierarchy]
        return f"{prefix}-{self._encoder_display()} {self._setting_display()}"

    def _encoder_display(self) -> str:
        if self.family == "recurrent":
            return "BiLSTM"
        if self.family == "convolutional":
            return "XML-CNN"
        name = (self.adapter_name or "").lower()
        if "scibert" in name:
            return "SciBERT"
        if "bert" in name:
            return "BERT"
        return self.adapter_name or "pretrained"

    def _setting_display(self) -> str:
        if self.multitask:
            return "Multi-Task"
        if self.input_mode == "text-only":
            return "w/o KW"
        if self.input_mode == "keywords-only":
            return "only KW"
        return "with KW" if self.keywords_at_test else "with KW-tr"

    def to_json(self) -> dict:
        return {
            "corpus": self.corpus,
            "taxonomy": self.taxonomy,
            "prepared_dir": self.prepared_dir,
            "run_dir": self.run_dir,
            "level": self.level,
            "min_support": self.min_support,
            "split_seed": self.split_seed,
            "family": self.family,
            "adapter_name": self.adapter_name,
            "embeddings": self.embeddings,
            "hierarchy": self.hierarchy,
            "input_mode": self.input_mode,
            "keywords_at_test": self.keywords_at_test,
            "multitask": self.multitask,
            "loss_weights": list(self.loss_weights),
            "seeds": list(self.seeds),
            "training": dict(self.training),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ExperimentConfig":
        payload = dict(payload)
        if "loss_weights" in payload:
            payload["loss_weights"] = tuple(payload["loss_weights"])
        if "seeds" in payload:
            payload["seeds"] = tuple(payload["seeds"])
        unknown = set(payload) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown experiment config keys: {sorted(unknown)}")
        return cls(**payload)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _grid_entry(hierarchy: str, family: str, adapter: str | None, setting: str) -> ExperimentConfig:
    base = ExperimentConfig(hierarchy=hierarchy, family=family, adapter_name=adapter)
    if setting == "w/o KW":
        return replace(base, input_mode="text-only", multitask=False)
    if setting == "with KW":
        return replace(base, input_mode="text-plus-keywords", keywords_at_test=True)
    if setting == "with KW-tr":
        return replace(base, input_mode="text-plus-keywords", keywords_at_test=False)
    if setting == "Multi-Task":
        return replace(base, input_mode="text-only", multitask=True)
    raise ValueError(setting)


def reference_grid() -> list[ExperimentConfig]:
    """Every row of the reference experiment grid as one config each.

    Main grid: {Flat, HR} x {BiLSTM, BERT, SciBERT} x {w/o KW, with KW}
    (12 rows); the no-keywords-at-test grid swaps the settings for
    {with KW-tr, Multi-Task} (12 rows); the convolutional block runs
    {Flat, HR} x XML-CNN over all four settings (8 rows).
    """
    encoders = [
        ("recurrent", None),
        ("pretrained", BERT_ADAPTER),
        ("pretrained", SCIBERT_ADAPTER),
    ]
    grid = []
    for setting in ("w/o KW", "with KW"):
        for hierarchy in ("flat", "hierarchical"):
            for family, adapter in encoders:
                grid.append(_grid_entry(hierarchy, family, adapter, setting))
    for setting in ("with KW-tr", "Multi-Task"):
        for hierarchy in ("flat", "hierarchical"):
            for family, adapter in encoders:
                grid.append(_grid_entry(hierarchy, family, adapter, setting))
    for hierarchy in ("flat", "hierarchical"):
        for setting in ("w/o KW", "with KW", "with KW-tr", "Multi-Task"):
            grid.append(_grid_entry(hierarchy, "convolutional", None, setting))
    return grid
