"""Training configuration with the reference hyperparameter defaults."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

from ..corpus.encoding import MAX_KEYWORD_TOKENS, MAX_TEXT_TOKENS
from ..models import LossWeights

CLASSICAL_LR = 1e-3
PRETRAINED_LR = 2e-5
BATCH_SIZE = 128

POS_WEIGHT_CANDIDATES = (1, 3, 5, 10, 15, 20, 25, 30, 35, 40)

LOSS_WEIGHT_GRID = (
    (0.3, 0.7),
    (0.4, 0.6),
    (0.5, 0.5),
    (0.6, 0.4),
    (0.7, 0.3),
    (1.0, 1.0),
)

HIERARCHIES = ("flat", "hierarchical", "n-binary")


@dataclass
class TrainConfig:
    learning_rate: float = CLASSICAL_LR
    batch_size: int = BATCH_SIZE
    max_epochs: int = 50
    patience: int | None = 10
    seed: int = 0
    loss_weights: LossWeights = field(default_factory=LossWeights)
    input_mode: str = "text-plus-keywords"
    multitask: bool = False
    keywords_at_test: bool = True
    pos_weight: float = 1.0
    pos_weight_search: bool = False
    pos_weight_candidates: tuple[float, ...] = POS_WEIGHT_CANDIDATES
    pos_weight_epochs: int = 2
    record_init_snapshots: bool = False

    def __post_init__(self):
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.patience is not None and self.max_epochs and self.patience >= self.max_epochs:
            # patience beyond the epoch budget silently degenerates to "none"
            self.patience = None

    @classmethod
    def reference_defaults(cls, hierarchy: str = "flat", family: str = "recurrent", **overrides) -> "TrainConfig":
        """Published settings per (hierarchy, encoder family) cell.

        Flat classical trains 50 epochs with patience 10; hierarchical
        classical 10 with patience 3 plus the positive-class weight search;
        pretrained encoders fine-tune 5 (flat) or 3 (hierarchical) epochs
        without early stopping.
        """
        pretrained = family == "pretrained"
        hierarchical = hierarchy in ("hierarchical", "n-binary")
        if pretrained:
            base = dict(
                learning_rate=PRETRAINED_LR,
                max_epochs=3 if hierarchical else 5,
                patience=None,
                pos_weight_search=False,
            )
        else:
            base = dict(
                learning_rate=CLASSICAL_LR,
                max_epochs=10 if hierarchical else 50,
                patience=3 if hierarchical else 10,
                pos_weight_search=hierarchical,
            )
        base.update(overrides)
        return cls(**base)

    def with_overrides(self, **overrides) -> "TrainConfig":
        return replace(self, **overrides)

    def to_json(self) -> dict:
        payload = {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "seed": self.seed,
            "loss_weights": [self.loss_weights.alpha, self.loss_weights.beta],
            "input_mode": self.input_mode,
            "multitask": self.multitask,
            "keywords_at_test": self.keywords_at_test,
            "pos_weight": self.pos_weight,
            "pos_weight_search": self.pos_weight_search,
            "pos_weight_candidates": list(self.pos_weight_candidates),
            "pos_weight_epochs": self.pos_weight_epochs,
            "record_init_snapshots": self.record_init_snapshots,
        }
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "TrainConfig":
        payload = dict(payload)
        alpha, beta = payload.pop("loss_weights", (1.0, 1.0))
        payload["loss_weights"] = LossWeights(alpha, beta)
        payload["pos_weight_candidates"] = tuple(payload.get("pos_weight_candidates", POS_WEIGHT_CANDIDATES))
        return cls(**payload)


def max_len_for_mode(input_mode: str, max_text: int = MAX_TEXT_TOKENS, max_kw: int = MAX_KEYWORD_TOKENS) -> int:
    if input_mode == "text-only":
        return max_text
    if input_mode == "text-plus-keywords":
        return max_text + max_kw
    if input_mode == "keywords-only":
        return max_kw
    raise ValueError(f"unknown input mode: {input_mode!r}")


def derive_seed(*parts) -> int:
    """Stable 32-bit seed from arbitrary labeled parts.

    Keeps per-topic model initialization independent of training order.
    """
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")
