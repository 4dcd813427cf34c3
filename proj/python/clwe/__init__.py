"""Bilingual word embeddings trained with dictionary translation selection."""

from ._core import (
    DataError,
    NumericalError,
    TrainedModel,
    TrainingConfig,
    UsageError,
    Vocabulary,
    bli_recall,
    cldc,
    cosine,
    load_embeddings,
    nearest_neighbors,
    save_embeddings,
    spearman,
    spearman_correlation,
    train,
)

__all__ = [
    "DataError",
    "NumericalError",
    "TrainedModel",
    "TrainingConfig",
    "UsageError",
    "Vocabulary",
    "bli_recall",
    "cldc",
    "cosine",
    "load_embeddings",
    "nearest_neighbors",
    "save_embeddings",
    "spearman",
    "spearman_correlation",
    "train",
]
