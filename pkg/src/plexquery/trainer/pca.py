"""PCA via exact symmetric eigendecomposition of the sample covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateData

DEFAULT_COMPONENTS = 128
RANK_TOL = 1e-12  # relative eigenvalue cutoff


@dataclass
class PcaModel:
    mean: np.ndarray  # (D,)
    components: np.ndarray  # (r, D), orthonormal rows
    explained_variance: np.ndarray  # (r,), non-increasing

    @property
    def rank(self) -> int:
        return self.components.shape[0]


def pca_fit(features: np.ndarray, r_max: int = DEFAULT_COMPONENTS) -> PcaModel:
    """Top principal components; r = min(r_max, D, N-1), clamped to rank.

    Raises DegenerateData when the data carries no variance at all."""
    x = np.asarray(features, dtype=float)
    n, d = x.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]

    cutoff = max(eigvals[0], 0.0) * RANK_TOL
    rank = int(np.sum(eigvals > cutoff))
    if rank == 0:
        raise DegenerateData("data has zero variance in every direction")
    r = min(r_max, d, n - 1, rank)

    components = eigvecs[:, :r].T.copy()
    # deterministic sign: largest-magnitude entry of each component positive
    for i in range(r):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance=np.maximum(eigvals[:r], 0.0),
    )


def pca_project(model: PcaModel, features: np.ndarray) -> np.ndarray:
    """(x - mean) @ components.T; accepts a matrix or a single vector."""
    x = np.asarray(features, dtype=float)
    return (x - model.mean) @ model.components.T
