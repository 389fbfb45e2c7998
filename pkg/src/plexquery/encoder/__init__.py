"""Trainable panel encoder, losses, memory dictionary."""

from .losses import (
    OUTLIER_LABEL,
    LossConfig,
    batch_cluster_nce,
    cluster_nce_loss,
    triplet_from_features,
    triplet_loss,
)
from .memory import MemoryDictionary, momentum_update
from .model import (
    EmbeddingSet,
    EncoderParams,
    backward,
    eca_gate,
    forward,
    forward_with_cache,
    init_params,
)
from .step import (
    DEFAULT_LR,
    combined_loss_and_grads,
    combined_step,
    step_with_triplet_fallback,
)

__all__ = [
    "DEFAULT_LR",
    "EmbeddingSet",
    "EncoderParams",
    "LossConfig",
    "MemoryDictionary",
    "OUTLIER_LABEL",
    "backward",
    "batch_cluster_nce",
    "cluster_nce_loss",
    "combined_loss_and_grads",
    "combined_step",
    "eca_gate",
    "forward",
    "forward_with_cache",
    "init_params",
    "momentum_update",
    "step_with_triplet_fallback",
    "triplet_from_features",
    "triplet_loss",
]
