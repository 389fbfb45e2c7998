"""Two-level map equation: description length of a random walk under a partition.

With W the total undirected edge weight, node visit rates are
p_a = strength(a)/(2W); module exit rates q_i sum the weights of edges
leaving module i over 2W. The code length in bits is

    L(M) = q * H(Q) + sum_i p_i_circ * H(P_i)

where q = sum_i q_i, p_i_circ = q_i + sum_{a in M_i} p_a, H(Q) is the
entropy of {q_i / q}, and H(P_i) the entropy of {q_i / p_i_circ} together
with {p_a / p_i_circ}. Empty terms (q = 0) contribute zero."""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptyGraph, IsolatedOnlyGraph
from ..graph.build import PatchGraph
from .partition import OUTLIER


def _entropy(probs: list[float]) -> float:
    h = 0.0
    for p in probs:
        if p > 0:
            h -= p * math.log2(p)
    return h


def _canonical_modules(labels: np.ndarray) -> np.ndarray:
    """Map labels to 0..M-1; each OUTLIER node becomes its own module."""
    labels = np.asarray(labels)
    out = np.empty(len(labels), dtype=np.int64)
    mapping: dict[int, int] = {}
    next_id = 0
    for i, lab in enumerate(labels):
        lab = int(lab)
        if lab == OUTLIER:
            out[i] = next_id
            next_id += 1
        else:
            if lab not in mapping:
                mapping[lab] = next_id
                next_id += 1
            out[i] = mapping[lab]
    return out


def map_equation(graph: PatchGraph, labels: np.ndarray) -> float:
    """Code length (bits) of the given partition on the graph.

    labels holds one module id per node position; OUTLIER nodes are treated
    as singleton modules (isolated nodes carry no flow either way).
    """
    n = graph.n_nodes
    if n == 0:
        raise EmptyGraph("graph has no nodes")
    if len(labels) != n:
        raise ValueError(f"{len(labels)} labels for {n} nodes")
    total = graph.total_weight
    if total <= 0:
        raise IsolatedOnlyGraph("graph has no positive-weight edges")

    modules = _canonical_modules(labels)
    n_modules = int(modules.max()) + 1
    two_w = 2.0 * total

    p_node = graph.strengths() / two_w
    module_p = np.zeros(n_modules)
    np.add.at(module_p, modules, p_node)

    q_mod = np.zeros(n_modules)
    for (i, j), w in zip(graph.edges, graph.weights):
        mi, mj = modules[i], modules[j]
        if mi != mj:
            q_mod[mi] += w / two_w
            q_mod[mj] += w / two_w

    q = float(q_mod.sum())
    p_circ = q_mod + module_p

    index_term = 0.0
    if q > 0:
        index_term = q * _entropy([qi / q for qi in q_mod])

    module_term = 0.0
    members_of: list[list[int]] = [[] for _ in range(n_modules)]
    for pos, m in enumerate(modules):
        members_of[m].append(pos)
    for m in range(n_modules):
        pc = p_circ[m]
        if pc <= 0:
            continue
        probs = [q_mod[m] / pc] + [p_node[a] / pc for a in members_of[m]]
        module_term += pc * _entropy(probs)

    return float(index_term + module_term)
