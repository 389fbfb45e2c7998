"""Immutable search index: per-panel artifacts plus a fused-partition cache."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from ..community.infomap import infomap
from ..community.partition import CommunityPartition
from ..errors import CapabilityMissing, UnknownCell, UnknownPanelSet
from ..graph.build import PatchGraph, fuse_graphs
from ..ingest.manifest import PanelDefinition
from ..trainer.pca import PcaModel, pca_fit, pca_project


@dataclass
class PanelIndex:
    """One panel's retrieval artifacts; pca/reduced/graph are None for
    CSV-loaded (community + intensity only) indexes."""

    panel: PanelDefinition
    patch_size: int
    partition: CommunityPartition
    pca: PcaModel | None = None
    reduced: np.ndarray | None = None  # (N, r)
    graph: PatchGraph | None = None


@dataclass
class SearchIndex:
    """Snapshot answering all query modes; immutable after build.

    The fused-partition cache is the only mutable state; insertion is
    first-writer-wins behind a lock so concurrent readers agree."""

    markers: list[str]
    cell_ids: np.ndarray  # (N,)
    coords: np.ndarray  # (N, 2)
    intensities: np.ndarray  # (N, len(markers)) per-cell mean intensity
    intensity_patch_size: int
    panels: dict[str, PanelIndex]
    seed: int = 0
    min_size: int = 5
    _pos: dict = field(default_factory=dict, repr=False)
    _fused: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self._pos = {int(cid): i for i, cid in enumerate(self.cell_ids)}

    @property
    def n_cells(self) -> int:
        return len(self.cell_ids)

    def pos_of(self, cell_id: int) -> int:
        try:
            return self._pos[int(cell_id)]
        except KeyError:
            raise UnknownCell(f"cell {cell_id} is not in the index") from None

    def panel_index(self, name: str) -> PanelIndex:
        try:
            return self.panels[name]
        except KeyError:
            raise UnknownPanelSet(f"panel {name!r} is not in the index") from None

    def marker_column(self, marker: str) -> np.ndarray:
        try:
            return self.intensities[:, self.markers.index(marker)]
        except ValueError:
            raise UnknownPanelSet(f"marker {marker!r} is not in the index") from None

    def fused_key(self, panel_names) -> tuple[str, ...]:
        return tuple(sorted(panel_names))

    def fused_partition(self, panel_names) -> CommunityPartition:
        """Intersection graph -> community detection; cached per panel set."""
        key = self.fused_key(panel_names)
        if len(key) < 2:
            raise ValueError("fusion needs at least 2 panels")
        cached = self._fused.get(key)
        if cached is not None:
            return cached
        graphs = []
        for name in key:
            pidx = self.panel_index(name)
            if pidx.graph is None:
                raise CapabilityMissing(
                    f"panel {name!r} has no graph (CSV-only index); "
                    "fused retrieval needs the binary snapshot"
                )
            graphs.append(pidx.graph)
        fused_graph = fuse_graphs(graphs)
        partition = infomap(fused_graph, min_size=self.min_size, seed=self.seed)
        with self._lock:
            # first writer wins; later arrivals reuse the stored partition
            existing = self._fused.get(key)
            if existing is not None:
                return existing
            self._fused[key] = partition
        return partition


def build_index(
    markers: list[str],
    cell_ids: np.ndarray,
    coords: np.ndarray,
    intensities: np.ndarray,
    intensity_patch_size: int,
    panel_artifacts: list[dict],
    seed: int = 0,
    min_size: int = 5,
    r_max: int = 128,
) -> SearchIndex:
    """Assemble a full index from trained-panel artifacts.

    Each artifact dict carries: panel (PanelDefinition), patch_size,
    features ((N, D) embedding matrix), partition, graph. PCA is fit here
    and embeddings are stored reduced."""
    cell_ids = np.asarray(cell_ids, dtype=np.int64)
    panels: dict[str, PanelIndex] = {}
    for art in panel_artifacts:
        features = art["features"]
        if features.shape[0] != len(cell_ids):
            raise ValueError(
                f"panel {art['panel'].name!r} has {features.shape[0]} embeddings "
                f"for {len(cell_ids)} cells; all panels must share the cell universe"
            )
        pca = pca_fit(features, r_max=r_max)
        panels[art["panel"].name] = PanelIndex(
            panel=art["panel"],
            patch_size=art["patch_size"],
            partition=art["partition"],
            pca=pca,
            reduced=pca_project(pca, features),
            graph=art["graph"],
        )
    return SearchIndex(
        markers=list(markers),
        cell_ids=cell_ids,
        coords=np.asarray(coords, dtype=float),
        intensities=np.asarray(intensities, dtype=float),
        intensity_patch_size=intensity_patch_size,
        panels=panels,
        seed=seed,
        min_size=min_size,
    )
