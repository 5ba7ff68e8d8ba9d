"""Workbench for hierarchical multi-label topic classification of papers.

Pipeline: taxonomy + raw paper records -> label-closed encoded datasets ->
flat / hierarchical one-vs-all / multi-task classifiers -> per-class
threshold tuning -> micro/macro F1 evaluation with multi-seed aggregation
and paired significance tests.
"""

from .estimators import FlatTopicClassifier, HierarchicalTopicClassifier
from .evaluation import MetricsReport, aggregate_runs, apply_thresholds, compute_metrics, paired_t_test
from .experiment import ExperimentConfig, reference_grid
from .pipeline import PreparedDataset, prepare_dataset
from .taxonomy import (
    TaxonomyTree,
    TopicNode,
    expand_labels,
    load_taxonomy,
    prune_by_support,
    training_order,
    truncate_to_level,
)

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "FlatTopicClassifier",
    "HierarchicalTopicClassifier",
    "MetricsReport",
    "PreparedDataset",
    "TaxonomyTree",
    "TopicNode",
    "aggregate_runs",
    "apply_thresholds",
    "compute_metrics",
    "expand_labels",
    "load_taxonomy",
    "paired_t_test",
    "reference_grid",
    "prepare_dataset",
    "prune_by_support",
    "training_order",
    "truncate_to_level",
]
