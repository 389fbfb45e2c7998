"""Training losses with exact analytic gradients.

Two terms drive the encoder: a cluster-contrastive softmax over memory
centroids (natural log, temperature tau) and a batch-hard triplet hinge on
Euclidean distances (margin m). Both return gradients wrt their inputs so
the encoder backward pass can chain them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NoValidTriplet, UnlabeledSample
from .memory import MemoryDictionary
from .model import EmbeddingSet

OUTLIER_LABEL = -1


@dataclass
class LossConfig:
    tau: float = 0.05  # softmax temperature
    margin: float = 0.3  # triplet margin
    lam: float = 1.0  # triplet weight
    mu: float = 0.2  # centroid momentum

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must be in [0, 1]")


def cluster_nce_loss(
    q: np.ndarray, label: int, memory: MemoryDictionary, tau: float
) -> tuple[float, np.ndarray]:
    """-log softmax of q.c_k/tau at the positive centroid, plus grad wrt q.

    Stabilized by subtracting the max logit; the gradient is exact:
    dL/dq = (sum_k p_k c_k - c_positive) / tau.
    """
    if label == OUTLIER_LABEL:
        raise UnlabeledSample("outlier-labeled sample; caller must exclude it")
    centroids = memory.centroids
    if not 0 <= label < centroids.shape[0]:
        raise ValueError(f"label {label} out of range for K={centroids.shape[0]}")
    logits = centroids @ q / tau
    shifted = logits - logits.max()
    expl = np.exp(shifted)
    p = expl / expl.sum()
    loss = float(np.log(expl.sum()) - shifted[label])
    grad = (p @ centroids - centroids[label]) / tau
    return loss, grad


def batch_cluster_nce(
    features: np.ndarray, labels: np.ndarray, memory: MemoryDictionary, tau: float
) -> tuple[float, np.ndarray]:
    """Mean contrastive loss over rows plus gradient wrt every row."""
    if np.any(labels == OUTLIER_LABEL):
        raise UnlabeledSample("outlier-labeled sample; caller must exclude it")
    centroids = memory.centroids
    n = features.shape[0]
    logits = features @ centroids.T / tau  # (N, K)
    shifted = logits - logits.max(axis=1, keepdims=True)
    expl = np.exp(shifted)
    p = expl / expl.sum(axis=1, keepdims=True)
    rows = np.arange(n)
    losses = np.log(expl.sum(axis=1)) - shifted[rows, labels]
    grad = (p @ centroids - centroids[labels]) / (tau * n)
    return float(losses.mean()), grad


def _pairwise_distances(features: np.ndarray) -> np.ndarray:
    gram = features @ features.T
    sq = np.diag(gram)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
    return np.sqrt(d2)


def triplet_from_features(
    features: np.ndarray, labels: np.ndarray, margin: float
) -> tuple[float, np.ndarray]:
    """Batch-hard triplet hinge: per anchor, the farthest same-label sample
    and the nearest different-label sample; mean over valid anchors.

    Subgradient at the hinge kink is 0. Returns (loss, grad wrt features).
    """
    n = features.shape[0]
    dist = _pairwise_distances(features)
    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    diff = labels[:, None] != labels[None, :]

    valid = same.any(axis=1) & diff.any(axis=1)
    if not valid.any():
        raise NoValidTriplet(
            "no anchor has both a same-label and a different-label sample"
        )

    pos_masked = np.where(same, dist, -np.inf)
    neg_masked = np.where(diff, dist, np.inf)
    p_idx = np.argmax(pos_masked, axis=1)
    n_idx = np.argmin(neg_masked, axis=1)

    grad = np.zeros_like(features)
    total = 0.0
    n_valid = int(valid.sum())
    for a in np.flatnonzero(valid):
        p, nn = p_idx[a], n_idx[a]
        d_ap, d_an = dist[a, p], dist[a, nn]
        h = d_ap - d_an + margin
        if h <= 0:
            continue
        total += h
        if d_ap > 0:
            g = (features[a] - features[p]) / (d_ap * n_valid)
            grad[a] += g
            grad[p] -= g
        if d_an > 0:
            g = (features[a] - features[nn]) / (d_an * n_valid)
            grad[a] -= g
            grad[nn] += g
    return total / n_valid, grad


def triplet_loss(
    batch: EmbeddingSet, labels: np.ndarray, margin: float
) -> tuple[float, np.ndarray]:
    return triplet_from_features(batch.features, np.asarray(labels), margin)
