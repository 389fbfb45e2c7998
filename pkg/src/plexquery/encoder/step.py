"""One optimization step over a mini-batch: combined loss, full backprop, SGD."""

from __future__ import annotations

import numpy as np

from ..errors import NoValidTriplet
from ..ingest.patches import PatchSet
from .losses import LossConfig, batch_cluster_nce, triplet_from_features
from .memory import MemoryDictionary
from .model import EncoderParams, backward, forward_with_cache

DEFAULT_LR = 3e-4


def combined_loss_and_grads(
    params: EncoderParams,
    pixels: np.ndarray,
    labels: np.ndarray,
    memory: MemoryDictionary,
    cfg: LossConfig,
) -> tuple[float, dict]:
    """Total loss (mean contrastive + lam * batch-hard triplet) and its
    gradients wrt every encoder parameter."""
    features, cache = forward_with_cache(params, pixels)
    loss, d_features = batch_cluster_nce(features, labels, memory, cfg.tau)
    if cfg.lam > 0:
        t_loss, t_grad = triplet_from_features(features, labels, cfg.margin)
        loss += cfg.lam * t_loss
        d_features = d_features + cfg.lam * t_grad
    grads = backward(params, cache, d_features)
    return loss, grads


def combined_step(
    params: EncoderParams,
    batch: PatchSet,
    labels: np.ndarray,
    memory: MemoryDictionary,
    cfg: LossConfig,
    lr: float = DEFAULT_LR,
) -> tuple[EncoderParams, float]:
    """Plain gradient descent on the combined loss; returns (new params, loss)."""
    labels = np.asarray(labels)
    loss, grads = combined_loss_and_grads(params, batch.pixels, labels, memory, cfg)
    new_params = EncoderParams(
        proj=params.proj - lr * grads["proj"],
        bias=params.bias - lr * grads["bias"],
        gate_kernel=params.gate_kernel - lr * grads["gate_kernel"],
        n_channels=params.n_channels,
        patch_size=params.patch_size,
    )
    return new_params, loss


def step_with_triplet_fallback(
    params: EncoderParams,
    batch: PatchSet,
    labels: np.ndarray,
    memory: MemoryDictionary,
    cfg: LossConfig,
    lr: float,
) -> tuple[EncoderParams, float]:
    """combined_step, dropping the triplet term when the batch has no valid
    triplet (single-community epochs)."""
    try:
        return combined_step(params, batch, labels, memory, cfg, lr)
    except NoValidTriplet:
        nce_only = LossConfig(tau=cfg.tau, margin=cfg.margin, lam=0.0, mu=cfg.mu)
        return combined_step(params, batch, labels, memory, nce_only, lr)
