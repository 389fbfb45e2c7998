"""Shared fixtures: tiny synthetic datasets and graph builders."""

from __future__ import annotations

import numpy as np
import pytest

from plexquery.graph import PatchGraph
from plexquery.ingest import RegionSpec, SyntheticSpec, generate_synthetic


def make_graph(n: int, edges: list[tuple[int, int, float]]) -> PatchGraph:
    return PatchGraph.from_edge_list(n, edges)


def triangle_pair() -> PatchGraph:
    """Two disjoint unit-weight triangles on 6 nodes."""
    return make_graph(
        6, [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)]
    )


def dumbbell() -> PatchGraph:
    """Two unit triangles joined by one bridge edge."""
    return make_graph(
        6,
        [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1), (2, 3, 1)],
    )


def random_connected_graph(rng: np.random.Generator, n: int) -> PatchGraph:
    """Random tree plus extra edges; uniform weights in (0.1, 1)."""
    edges: dict[tuple[int, int], float] = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = float(rng.uniform(0.1, 1.0))
    for _ in range(int(rng.integers(0, n))):
        i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
        edges.setdefault((i, j), float(rng.uniform(0.1, 1.0)))
    return make_graph(n, [(i, j, w) for (i, j), w in edges.items()])


def four_band_spec(
    width: int = 240,
    height: int = 240,
    n_cells: int = 400,
    noise: float = 0.02,
    margin: int = 13,
) -> SyntheticSpec:
    """Four horizontal bands, one cell type per band, 5 channels."""
    markers = [f"m{i}" for i in range(5)]
    h = height // 4
    regions = [
        RegionSpec(name=f"band{i}", region_id=i + 1, kind="band", y0=i * h, y1=(i + 1) * h)
        for i in range(4)
    ]
    signatures = {
        "band0": {"t0": [0.9, 0.1, 0.05, 0.05, 0.1]},
        "band1": {"t1": [0.05, 0.9, 0.1, 0.05, 0.1]},
        "band2": {"t2": [0.05, 0.1, 0.9, 0.05, 0.1]},
        "band3": {"t3": [0.05, 0.05, 0.1, 0.9, 0.1]},
    }
    return SyntheticSpec(
        width=width,
        height=height,
        markers=markers,
        regions=regions,
        signatures=signatures,
        n_cells=n_cells,
        noise=noise,
        margin=margin,
    )


@pytest.fixture(scope="session")
def four_band_data():
    spec = four_band_spec()
    return spec, generate_synthetic(spec, seed=11)
