"""Retrieval modes: top-N cosine, community membership, fused communities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..community.partition import OUTLIER, CommunityPartition
from ..errors import CapabilityMissing, OutlierQuery, UnknownCommunity
from .index import SearchIndex

NORM_FLOOR = 1e-30


@dataclass
class RetrievalResult:
    """Ordered cells with optional scores; scores are non-increasing."""

    cell_ids: list[int]
    scores: list[float] | None
    mode: str
    panels: list[str]


def _cosine_to(rows: np.ndarray, vector: np.ndarray) -> np.ndarray:
    norms = np.maximum(np.linalg.norm(rows, axis=1), NORM_FLOOR)
    vnorm = max(float(np.linalg.norm(vector)), NORM_FLOOR)
    return rows @ vector / (norms * vnorm)


def topn_cosine(index: SearchIndex, panel: str, query_cell: int, n: int) -> RetrievalResult:
    """Exact cosine against every other cell in the reduced space; ties on
    the score break to the lower cell id; the query itself is excluded."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pidx = index.panel_index(panel)
    if pidx.reduced is None:
        raise CapabilityMissing(
            f"panel {panel!r} carries no embeddings (CSV-only index)"
        )
    pos = index.pos_of(query_cell)
    sims = _cosine_to(pidx.reduced, pidx.reduced[pos])
    order = np.lexsort((index.cell_ids, -sims))
    order = order[order != pos][:n]
    return RetrievalResult(
        cell_ids=[int(index.cell_ids[i]) for i in order],
        scores=[float(sims[i]) for i in order],
        mode="topn",
        panels=[panel],
    )


def _community_members_ranked(
    index: SearchIndex, partition: CommunityPartition, community: int
) -> tuple[list[int], list[float]]:
    """Members ordered by cosine (descending) to the community's mean
    intensity vector; computable for CSV-only indexes too."""
    member_pos = np.flatnonzero(partition.labels == community)
    if member_pos.size == 0:
        raise UnknownCommunity(f"community {community} has no members")
    rows = index.intensities[member_pos]
    centroid = rows.mean(axis=0)
    sims = _cosine_to(rows, centroid)
    order = np.lexsort((index.cell_ids[member_pos], -sims))
    ranked = member_pos[order]
    return (
        [int(index.cell_ids[i]) for i in ranked],
        [float(sims[j]) for j in order],
    )


def community_retrieve(index: SearchIndex, panel: str, query_cell: int) -> RetrievalResult:
    """All members of the query's community (query included)."""
    pidx = index.panel_index(panel)
    pos = index.pos_of(query_cell)
    label = int(pidx.partition.labels[pos])
    if label == OUTLIER:
        raise OutlierQuery(
            f"cell {query_cell} is unclustered in panel {panel!r}; "
            "fall back to topn_cosine"
        )
    cells, scores = _community_members_ranked(index, pidx.partition, label)
    return RetrievalResult(cell_ids=cells, scores=scores, mode="community", panels=[panel])


def fused_retrieve(index: SearchIndex, panels, query_cell: int) -> RetrievalResult:
    """Community retrieval on the intersection-graph partition of >= 2 panels."""
    names = sorted(set(panels))
    if len(names) < 2:
        raise ValueError("fused retrieval needs at least 2 panels; use community mode")
    partition = index.fused_partition(names)
    pos = index.pos_of(query_cell)
    label = int(partition.labels[pos])
    if label == OUTLIER:
        raise OutlierQuery(
            f"cell {query_cell} is unclustered in the fused partition {names}"
        )
    cells, scores = _community_members_ranked(index, partition, label)
    return RetrievalResult(cell_ids=cells, scores=scores, mode="fused", panels=names)


def representative_patches(
    index: SearchIndex, panel: str, community: int, count: int
) -> list[int]:
    """The count members closest (by cosine) to the community centroid."""
    if count < 1:
        raise ValueError("count must be >= 1")
    pidx = index.panel_index(panel)
    if not 0 <= community < pidx.partition.n_communities:
        raise UnknownCommunity(
            f"panel {panel!r} has no community {community} "
            f"(K={pidx.partition.n_communities})"
        )
    cells, _ = _community_members_ranked(index, pidx.partition, community)
    return cells[:count]
