"""Greedy two-level map-equation minimization with module aggregation.

Search: start from singleton modules; repeatedly sweep the nodes in a
seeded random order, moving each to the adjacent module that most reduces
the code length (ties to the lowest module id). When a sweep makes no move,
aggregate modules into super-nodes and recurse on the coarser graph; stop
when aggregation no longer changes anything. The returned code length never
exceeds the single-module baseline: if the greedy local optimum is worse,
the single-module partition is returned instead."""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptyGraph
from ..graph.build import PatchGraph
from .map_equation import map_equation
from .partition import OUTLIER, CommunityPartition

MOVE_EPS = 1e-12  # minimum code-length decrease worth a move


def _plogp(x: float) -> float:
    return x * math.log2(x) if x > 0.0 else 0.0


class _Level:
    """One resolution of the search: super-nodes with internal weight."""

    def __init__(
        self,
        adj: list[dict[int, float]],
        strength: np.ndarray,
        self_internal: np.ndarray,
        groups: list[list[int]],
        two_w: float,
    ):
        self.adj = adj
        self.strength = strength
        self.self_internal = self_internal
        self.groups = groups  # original node positions per super-node
        self.two_w = two_w
        self.n = len(adj)

    @classmethod
    def from_graph(cls, graph: PatchGraph, keep: np.ndarray) -> "_Level":
        """Level 0 over the given node positions (non-isolated nodes)."""
        pos_map = {int(p): i for i, p in enumerate(keep)}
        n = len(keep)
        adj: list[dict[int, float]] = [dict() for _ in range(n)]
        for (i, j), w in zip(graph.edges, graph.weights):
            a = pos_map.get(int(i))
            b = pos_map.get(int(j))
            if a is None or b is None:
                continue
            adj[a][b] = adj[a].get(b, 0.0) + float(w)
            adj[b][a] = adj[b].get(a, 0.0) + float(w)
        strength = np.array([sum(d.values()) for d in adj])
        return cls(
            adj=adj,
            strength=strength,
            self_internal=np.zeros(n),
            groups=[[int(p)] for p in keep],
            two_w=float(strength.sum()),
        )


def _module_rates(s: float, wint: float, two_w: float) -> tuple[float, float]:
    q = (s - 2.0 * wint) / two_w
    if q < 0.0:
        q = 0.0
    return q, q + s / two_w


def _local_moves(level: _Level, module_of: np.ndarray, rng: np.random.Generator) -> bool:
    """Sweep nodes until no move improves; returns whether anything moved."""
    two_w = level.two_w
    s_mod = np.zeros(level.n)
    wint_mod = np.zeros(level.n)
    for v in range(level.n):
        m = module_of[v]
        s_mod[m] += level.strength[v]
        wint_mod[m] += level.self_internal[v]
    for v in range(level.n):
        for u, w in level.adj[v].items():
            if v < u and module_of[v] == module_of[u]:
                wint_mod[module_of[v]] += w

    def sum_q() -> float:
        total = 0.0
        for m in range(level.n):
            if s_mod[m] > 0:
                total += _module_rates(s_mod[m], wint_mod[m], two_w)[0]
        return total

    moved_any = False
    while True:
        sumq = sum_q()  # recompute per sweep to wash accumulation drift
        moves = 0
        for v in rng.permutation(level.n):
            v = int(v)
            a = int(module_of[v])
            s_v = float(level.strength[v])
            self_v = float(level.self_internal[v])

            link_to: dict[int, float] = {}
            for u, w in level.adj[v].items():
                link_to[int(module_of[u])] = link_to.get(int(module_of[u]), 0.0) + w
            k_va = link_to.get(a, 0.0)

            q_a, pc_a = _module_rates(s_mod[a], wint_mod[a], two_w)
            q_a2, pc_a2 = _module_rates(
                s_mod[a] - s_v, wint_mod[a] - k_va - self_v, two_w
            )
            base_old = -2.0 * (_plogp(q_a)) + _plogp(pc_a)
            base_new = -2.0 * (_plogp(q_a2)) + _plogp(pc_a2)

            best_delta = 0.0
            best_module = a
            best_newq = sumq
            for b, k_vb in link_to.items():
                if b == a:
                    continue
                q_b, pc_b = _module_rates(s_mod[b], wint_mod[b], two_w)
                q_b2, pc_b2 = _module_rates(
                    s_mod[b] + s_v, wint_mod[b] + k_vb + self_v, two_w
                )
                new_sumq = sumq - q_a - q_b + q_a2 + q_b2
                delta = (
                    _plogp(new_sumq)
                    - _plogp(sumq)
                    + base_new
                    - base_old
                    - 2.0 * (_plogp(q_b2) - _plogp(q_b))
                    + (_plogp(pc_b2) - _plogp(pc_b))
                )
                if delta < best_delta - MOVE_EPS or (
                    delta < best_delta + MOVE_EPS
                    and best_module != a
                    and b < best_module
                    and delta < -MOVE_EPS
                ):
                    best_delta = delta
                    best_module = b
                    best_newq = new_sumq
            if best_module != a:
                b = best_module
                k_vb = link_to.get(b, 0.0)
                s_mod[a] -= s_v
                wint_mod[a] -= k_va + self_v
                s_mod[b] += s_v
                wint_mod[b] += k_vb + self_v
                module_of[v] = b
                sumq = best_newq
                moves += 1
        if moves == 0:
            break
        moved_any = True
    return moved_any


def _aggregate(level: _Level, module_of: np.ndarray) -> _Level:
    used = sorted(set(int(m) for m in module_of))
    remap = {m: i for i, m in enumerate(used)}
    n_new = len(used)
    adj: list[dict[int, float]] = [dict() for _ in range(n_new)]
    strength = np.zeros(n_new)
    self_internal = np.zeros(n_new)
    groups: list[list[int]] = [[] for _ in range(n_new)]
    for v in range(level.n):
        m = remap[int(module_of[v])]
        strength[m] += level.strength[v]
        self_internal[m] += level.self_internal[v]
        groups[m].extend(level.groups[v])
    for v in range(level.n):
        mv = remap[int(module_of[v])]
        for u, w in level.adj[v].items():
            mu = remap[int(module_of[u])]
            if mv == mu:
                if v < u:
                    self_internal[mv] += w
            elif mu not in adj[mv]:
                adj[mv][mu] = w
            else:
                adj[mv][mu] += w
    return _Level(adj, strength, self_internal, groups, level.two_w)


def _search(graph: PatchGraph, keep: np.ndarray, seed: int) -> np.ndarray:
    """Greedy optimization; returns a module id per kept node position."""
    rng = np.random.default_rng(seed)
    level = _Level.from_graph(graph, keep)
    flat = {int(p): i for i, p in enumerate(keep)}  # original pos -> module
    while True:
        module_of = np.arange(level.n)
        moved = _local_moves(level, module_of, rng)
        if level.n > 1 and len(set(module_of.tolist())) == level.n:
            break  # nothing merged at this resolution
        level = _aggregate(level, module_of)
        for m, members in enumerate(level.groups):
            for p in members:
                flat[p] = m
        if not moved or level.n <= 1:
            break
    labels = np.empty(len(keep), dtype=np.int64)
    for i, p in enumerate(keep):
        labels[i] = flat[int(p)]
    return labels


def infomap(graph: PatchGraph, min_size: int = 5, seed: int = 0) -> CommunityPartition:
    """Two-level community detection returning pseudo-labels and code length.

    Isolated nodes get the OUTLIER label and are excluded from flow terms;
    communities smaller than min_size are relabeled OUTLIER after the
    search. The stored code length is the raw optimized partition's (before
    the min_size relabeling).
    """
    if graph.n_nodes == 0:
        raise EmptyGraph("cannot cluster an empty graph")
    strengths = graph.strengths()
    keep = np.flatnonzero(strengths > 0)
    labels_full = np.full(graph.n_nodes, OUTLIER, dtype=np.int64)

    if keep.size == 0:
        return CommunityPartition(
            node_ids=graph.node_ids.copy(),
            labels=labels_full,
            n_communities=0,
            code_length=0.0,
        )

    kept_labels = _search(graph, keep, seed)

    # evaluate on the full graph: kept nodes get their module, isolated stay OUTLIER
    candidate = labels_full.copy()
    candidate[keep] = kept_labels
    code = map_equation(graph, candidate)

    single = labels_full.copy()
    single[keep] = 0
    single_code = map_equation(graph, single)
    if code > single_code + MOVE_EPS:
        candidate = single
        code = single_code

    return _finalize(graph, candidate, keep, code, min_size)


def _finalize(
    graph: PatchGraph,
    raw_labels: np.ndarray,
    keep: np.ndarray,
    code: float,
    min_size: int,
) -> CommunityPartition:
    """Relabel min_size-or-larger communities to 0..K-1 by descending size."""
    labels = np.full(graph.n_nodes, OUTLIER, dtype=np.int64)
    sizes: dict[int, int] = {}
    first_pos: dict[int, int] = {}
    for pos in keep:
        m = int(raw_labels[pos])
        sizes[m] = sizes.get(m, 0) + 1
        first_pos.setdefault(m, int(pos))
    ranked = sorted(
        (m for m, s in sizes.items() if s >= min_size),
        key=lambda m: (-sizes[m], first_pos[m]),
    )
    remap = {m: i for i, m in enumerate(ranked)}
    for pos in keep:
        m = int(raw_labels[pos])
        if m in remap:
            labels[pos] = remap[m]
    return CommunityPartition(
        node_ids=graph.node_ids.copy(),
        labels=labels,
        n_communities=len(ranked),
        code_length=float(code),
    )
