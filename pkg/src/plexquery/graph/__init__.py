"""Spatially-biased weighted kNN patch graphs and multi-panel fusion."""

from .build import (
    GraphConfig,
    PatchGraph,
    build_knn_graph,
    export_edge_csv,
    fuse_graphs,
    proximity,
)

__all__ = [
    "GraphConfig",
    "PatchGraph",
    "build_knn_graph",
    "export_edge_csv",
    "fuse_graphs",
    "proximity",
]
