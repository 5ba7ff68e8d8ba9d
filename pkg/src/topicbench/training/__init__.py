"""Training: flat, hierarchical, n-binary and multi-task trainers."""

from .checkpoints import (
    Checkpoint,
    RunDirectory,
    atomic_write_json,
    load_checkpoint,
    save_checkpoint,
)
from .config import (
    BATCH_SIZE,
    CLASSICAL_LR,
    LOSS_WEIGHT_GRID,
    POS_WEIGHT_CANDIDATES,
    PRETRAINED_LR,
    TrainConfig,
    derive_seed,
    max_len_for_mode,
)
from .flat import train_flat, train_multitask
from .hierarchical import train_hierarchical, train_n_binary
from .inference import (
    flat_probabilities,
    hierarchical_probabilities,
    keyword_f1,
    rebuild_network,
)
from .loop import AdapterCollator, ClassicalCollator, FitResult, fit_model, predict_probs
from .selection import ThresholdSet, select_pos_weight, tune_thresholds

__all__ = [
    "AdapterCollator",
    "BATCH_SIZE",
    "CLASSICAL_LR",
    "Checkpoint",
    "ClassicalCollator",
    "FitResult",
    "LOSS_WEIGHT_GRID",
    "POS_WEIGHT_CANDIDATES",
    "PRETRAINED_LR",
    "RunDirectory",
    "ThresholdSet",
    "TrainConfig",
    "atomic_write_json",
    "derive_seed",
    "fit_model",
    "flat_probabilities",
    "hierarchical_probabilities",
    "keyword_f1",
    "load_checkpoint",
    "max_len_for_mode",
    "predict_probs",
    "rebuild_network",
    "save_checkpoint",
    "select_pos_weight",
    "train_flat",
    "train_hierarchical",
    "train_multitask",
    "train_n_binary",
    "tune_thresholds",
]
