"""Weighted undirected kNN graph over patch embeddings.

Edge weights follow s(i,j) = cos(e_i, e_j) * exp(-||pos_i - pos_j|| / sigma);
pairs with non-positive cosine carry no random-walk flow and are excluded.
Neighbor search is exact brute force over all pairs; symmetrization is by
union (an edge exists if either endpoint selects the other), which keeps
small communities connected."""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ..errors import NodeSetMismatch

if TYPE_CHECKING:
    from ..encoder.model import EmbeddingSet

DEFAULT_K = 20
SIGMA_PATCH_FACTOR = 4  # default sigma = 4 * patch_size


@dataclass
class GraphConfig:
    k: int = DEFAULT_K
    sigma: float = 100.0  # px; callers default this to 4 * patch_size

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")


@dataclass
class PatchGraph:
    """Undirected weighted graph over patches; node ids are cell ids."""

    node_ids: np.ndarray  # (N,) int64
    coords: np.ndarray  # (N, 2) float64
    edges: np.ndarray  # (E, 2) int64 positions into node_ids, i < j
    weights: np.ndarray  # (E,) float64, > 0
    _adjacency: list | None = field(default=None, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def adjacency(self) -> list[list[tuple[int, float]]]:
        """Neighbor list per node position; built once, cached."""
        if self._adjacency is None:
            adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n_nodes)]
            for (i, j), w in zip(self.edges, self.weights):
                adj[i].append((int(j), float(w)))
                adj[j].append((int(i), float(w)))
            self._adjacency = adj
        return self._adjacency

    def strengths(self) -> np.ndarray:
        s = np.zeros(self.n_nodes)
        np.add.at(s, self.edges[:, 0], self.weights)
        np.add.at(s, self.edges[:, 1], self.weights)
        return s

    def edge_dict(self) -> dict[tuple[int, int], float]:
        """Edges keyed by (cell_id_i, cell_id_j) with i < j."""
        ids = self.node_ids
        out = {}
        for (i, j), w in zip(self.edges, self.weights):
            a, b = int(ids[i]), int(ids[j])
            if a > b:
                a, b = b, a
            out[(a, b)] = float(w)
        return out

    @classmethod
    def from_edge_list(
        cls,
        n_nodes: int,
        edges: list[tuple[int, int, float]],
        node_ids: np.ndarray | None = None,
        coords: np.ndarray | None = None,
    ) -> "PatchGraph":
        """Build from (i, j, weight) position triples; checks the invariants."""
        seen: set[tuple[int, int]] = set()
        pairs = []
        weights = []
        for i, j, w in edges:
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if w <= 0:
                raise ValueError(f"non-positive weight {w} on edge ({i}, {j})")
            a, b = (i, j) if i < j else (j, i)
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
            pairs.append((a, b))
            weights.append(float(w))
        order = sorted(range(len(pairs)), key=lambda k: pairs[k])
        return cls(
            node_ids=(
                np.arange(n_nodes, dtype=np.int64)
                if node_ids is None
                else np.asarray(node_ids, dtype=np.int64)
            ),
            coords=(
                np.zeros((n_nodes, 2)) if coords is None else np.asarray(coords, float)
            ),
            edges=(
                np.array([pairs[k] for k in order], dtype=np.int64)
                if pairs
                else np.empty((0, 2), dtype=np.int64)
            ),
            weights=np.array([weights[k] for k in order]),
        )


def proximity(
    emb_i: np.ndarray,
    emb_j: np.ndarray,
    pos_i: np.ndarray,
    pos_j: np.ndarray,
    sigma: float,
) -> float | None:
    """Similarity with a modest spatial bias; None when the cosine is <= 0."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    ni = np.linalg.norm(emb_i)
    nj = np.linalg.norm(emb_j)
    if ni == 0 or nj == 0:
        return None
    cos = float(np.dot(emb_i, emb_j) / (ni * nj))
    if cos <= 0:
        return None
    dist = float(np.linalg.norm(np.asarray(pos_i, float) - np.asarray(pos_j, float)))
    return cos * np.exp(-dist / sigma)


def _similarity_block(
    features: np.ndarray, coords: np.ndarray, rows: np.ndarray, sigma: float
) -> np.ndarray:
    """Eq.-3 weights for the given row block against all nodes; self and
    non-positive-cosine entries are -inf."""
    cos = features[rows] @ features.T
    delta = coords[rows, None, :] - coords[None, :, :]
    dist = np.sqrt((delta**2).sum(axis=2))
    s = np.where(cos > 0, cos * np.exp(-dist / sigma), -np.inf)
    for local, r in enumerate(rows):
        s[local, r] = -np.inf
    return s


def build_knn_graph(
    emb: "EmbeddingSet",
    coords: np.ndarray,
    cfg: GraphConfig,
    threads: int = 1,
) -> PatchGraph:
    """Union-symmetrized exact kNN graph under the spatially-biased weight.

    Each node selects its k highest-weight neighbors among positive-cosine
    pairs (ties break to the lower node position); an edge exists when
    either endpoint selected the other. Nodes with no positive-weight
    neighbor are emitted isolated with a warning.
    """
    features = emb.features
    coords = np.asarray(coords, dtype=float)
    n = features.shape[0]
    if n < 2:
        raise ValueError("need at least 2 nodes to build a graph")
    if coords.shape != (n, 2):
        raise ValueError(f"coords shape {coords.shape} does not match N={n}")

    k = min(cfg.k, n - 1)
    blocks = _row_blocks(n, threads)

    def pick(rows: np.ndarray) -> list[tuple[int, int, float]]:
        s = _similarity_block(features, coords, rows, cfg.sigma)
        chosen: list[tuple[int, int, float]] = []
        # argsort on (-s, index): stable mergesort keeps the lowest index first on ties
        for local, r in enumerate(rows):
            row = s[local]
            order = np.argsort(-row, kind="stable")[:k]
            for j in order:
                if row[j] == -np.inf:
                    break
                chosen.append((int(r), int(j), float(row[j])))
        return chosen

    if len(blocks) == 1:
        selections = pick(blocks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            selections = [e for part in pool.map(pick, blocks) for e in part]

    edge_map: dict[tuple[int, int], float] = {}
    for i, j, w in selections:
        key = (i, j) if i < j else (j, i)
        edge_map[key] = w  # identical weight from either direction

    connected = {i for pair in edge_map for i in pair}
    n_isolated = n - len(connected)
    if n_isolated:
        warnings.warn(
            f"{n_isolated} node(s) have no positive-weight neighbor; "
            "emitted isolated",
            stacklevel=2,
        )

    if edge_map:
        keys = sorted(edge_map)
        edges = np.array(keys, dtype=np.int64)
        weights = np.array([edge_map[k_] for k_ in keys])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
        weights = np.empty(0)
    return PatchGraph(
        node_ids=np.asarray(emb.cell_ids, dtype=np.int64).copy(),
        coords=coords.copy(),
        edges=edges,
        weights=weights,
    )


def _row_blocks(n: int, threads: int) -> list[np.ndarray]:
    threads = max(1, int(threads))
    if threads == 1 or n < 2 * threads:
        return [np.arange(n)]
    return np.array_split(np.arange(n), threads)


def fuse_graphs(graphs: list[PatchGraph]) -> PatchGraph:
    """Intersection of edge sets with arithmetic-mean weights.

    All graphs must share the identical node-id set; the fused graph keeps
    the first graph's node ordering and coordinates.
    """
    if not graphs:
        raise ValueError("need at least one graph")
    base = graphs[0]
    base_ids = set(int(i) for i in base.node_ids)
    for g in graphs[1:]:
        if set(int(i) for i in g.node_ids) != base_ids:
            raise NodeSetMismatch("graphs do not share the same node-id set")

    dicts = [g.edge_dict() for g in graphs]
    common = set(dicts[0])
    for d in dicts[1:]:
        common &= set(d)

    pos_of = {int(cid): p for p, cid in enumerate(base.node_ids)}
    keys = sorted(common)
    edges = []
    weights = []
    for a, b in keys:
        i, j = pos_of[a], pos_of[b]
        if i > j:
            i, j = j, i
        edges.append((i, j))
        weights.append(sum(d[(a, b)] for d in dicts) / len(dicts))
    edges_arr = (
        np.array(edges, dtype=np.int64) if edges else np.empty((0, 2), dtype=np.int64)
    )
    order = np.lexsort((edges_arr[:, 1], edges_arr[:, 0])) if len(edges) else []
    return PatchGraph(
        node_ids=base.node_ids.copy(),
        coords=base.coords.copy(),
        edges=edges_arr[order] if len(edges) else edges_arr,
        weights=np.array(weights)[order] if len(edges) else np.empty(0),
    )


def export_edge_csv(graph: PatchGraph, path: str | Path) -> int:
    """Write `i,j,weight` rows (cell ids, full-precision weights)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ids = graph.node_ids
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "weight"])
        for (i, j), w in zip(graph.edges, graph.weights):
            writer.writerow([int(ids[i]), int(ids[j]), repr(float(w))])
    return graph.n_edges
