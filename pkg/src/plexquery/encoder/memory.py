"""Memory dictionary of cluster centroids with momentum updates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OUTLIER_LABEL = -1


@dataclass
class MemoryDictionary:
    """K unit-norm centroids plus the cluster sizes they were built from."""

    centroids: np.ndarray  # (K, D), rows unit norm
    sizes: np.ndarray  # (K,)

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    @classmethod
    def from_embeddings(
        cls, features: np.ndarray, labels: np.ndarray, n_clusters: int
    ) -> "MemoryDictionary":
        """Centroids = unit-normalized mean feature per cluster 0..K-1."""
        if n_clusters < 1:
            raise ValueError("need at least one cluster")
        d = features.shape[1]
        centroids = np.zeros((n_clusters, d))
        sizes = np.zeros(n_clusters, dtype=np.int64)
        for k in range(n_clusters):
            members = labels == k
            count = int(members.sum())
            if count == 0:
                raise ValueError(f"cluster {k} has no members")
            mean = features[members].mean(axis=0)
            centroids[k] = _unit(mean)
            sizes[k] = count
        return cls(centroids=centroids, sizes=sizes)


def _unit(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    return v if norm == 0 else v / norm


def momentum_update(
    memory: MemoryDictionary,
    features: np.ndarray,
    labels: np.ndarray,
    mu: float,
) -> MemoryDictionary:
    """c_k <- normalize((1-mu) c_k + mu * batch mean of cluster k).

    Clusters absent from the batch are untouched; outlier labels ignored.
    """
    if not 0.0 <= mu <= 1.0:
        raise ValueError("mu must be in [0, 1]")
    if mu == 0.0:  # exact identity, no renormalization drift
        return MemoryDictionary(
            centroids=memory.centroids.copy(), sizes=memory.sizes.copy()
        )
    centroids = memory.centroids.copy()
    labels = np.asarray(labels)
    for k in np.unique(labels):
        if k == OUTLIER_LABEL:
            continue
        batch_mean = features[labels == k].mean(axis=0)
        centroids[k] = _unit((1.0 - mu) * centroids[k] + mu * batch_mean)
    return MemoryDictionary(centroids=centroids, sizes=memory.sizes.copy())
