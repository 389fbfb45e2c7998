"""Neural-network-free retrieval over standardized handcrafted features."""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import NoUsableFeatures
from .index import SearchIndex
from .retrieval import NORM_FLOOR, RetrievalResult


def quick_search(
    index: SearchIndex, query_cell: int, features: list[str], n: int
) -> tuple[RetrievalResult, np.ndarray]:
    """Cosine retrieval over z-scored feature columns.

    Zero-variance columns are dropped with a warning; with none left,
    NoUsableFeatures is raised. Score ties break by Euclidean distance in
    the standardized space, then by cell id (a single-feature search thus
    returns value-nearest cells). Also returns the n x n pairwise cosine
    matrix of the retrieved set."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not features:
        raise NoUsableFeatures("no feature columns selected")
    columns = []
    kept_names = []
    for name in features:
        col = index.marker_column(name)
        std = col.std()
        if std == 0:
            warnings.warn(f"feature {name!r} has zero variance; dropped", stacklevel=2)
            continue
        columns.append((col - col.mean()) / std)
        kept_names.append(name)
    if not columns:
        raise NoUsableFeatures("all selected features have zero variance")
    z = np.stack(columns, axis=1)  # (N, F)

    pos = index.pos_of(query_cell)
    q = z[pos]
    norms = np.maximum(np.linalg.norm(z, axis=1), NORM_FLOOR)
    qnorm = max(float(np.linalg.norm(q)), NORM_FLOOR)
    sims = z @ q / (norms * qnorm)
    dists = np.linalg.norm(z - q, axis=1)
    order = np.lexsort((index.cell_ids, dists, -sims))
    order = order[order != pos][:n]

    retrieved = z[order]
    rnorms = np.maximum(np.linalg.norm(retrieved, axis=1), NORM_FLOOR)
    matrix = (retrieved @ retrieved.T) / np.outer(rnorms, rnorms)
    np.fill_diagonal(matrix, 1.0)

    result = RetrievalResult(
        cell_ids=[int(index.cell_ids[i]) for i in order],
        scores=[float(sims[i]) for i in order],
        mode="quick",
        panels=kept_names,
    )
    return result, matrix
