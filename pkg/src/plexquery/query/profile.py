"""Expression profiles: per-marker statistics over a retrieved cell set."""

from __future__ import annotations

import numpy as np

from ..errors import EmptySet
from .index import SearchIndex


def expression_profile(index: SearchIndex, cells) -> dict[str, tuple[float, float]]:
    """Per manifest marker: (mean, std) of the per-cell mean intensities.

    std is the population standard deviation, so a singleton set reports 0."""
    cell_list = list(cells)
    if not cell_list:
        raise EmptySet("expression profile of an empty cell set")
    rows = np.array([index.pos_of(c) for c in cell_list])
    block = index.intensities[rows]  # (n, markers)
    means = block.mean(axis=0)
    stds = block.std(axis=0)
    return {
        marker: (float(means[i]), float(stds[i]))
        for i, marker in enumerate(index.markers)
    }
