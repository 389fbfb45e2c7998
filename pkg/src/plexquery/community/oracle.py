"""Exhaustive partition search: the test oracle for the greedy optimizer."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from ..errors import TooLarge
from ..graph.build import PatchGraph
from .map_equation import map_equation

MAX_NODES = 10


def set_partitions(n: int) -> Iterator[np.ndarray]:
    """All set partitions of n items as restricted growth strings.

    a[i] is the block index of item i, with a[i] <= 1 + max(a[:i]); the
    number of strings is the Bell number B(n)."""
    a = np.zeros(n, dtype=np.int64)
    b = np.zeros(n, dtype=np.int64)  # b[i] = max(a[:i+1]) running prefix max
    while True:
        yield a.copy()
        i = n - 1
        while i > 0 and a[i] == b[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        b[i] = max(b[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            b[j] = b[i]


def brute_force_partition(graph: PatchGraph) -> tuple[np.ndarray, float]:
    """Global minimum of the map equation by enumerating every partition.

    Only feasible for tiny graphs (<= 10 nodes, Bell(10) = 115975); returns
    (labels, code_length). Ties keep the first partition in enumeration
    order, which is deterministic."""
    n = graph.n_nodes
    if n > MAX_NODES:
        raise TooLarge(f"{n} nodes exceeds the brute-force limit of {MAX_NODES}")
    if graph.total_weight <= 0:
        # no flow: every partition codes zero bits (1-node graphs included)
        return np.zeros(n, dtype=np.int64), 0.0
    best_labels = None
    best_code = np.inf
    for labels in set_partitions(n):
        code = map_equation(graph, labels)
        if code < best_code:
            best_code = code
            best_labels = labels
    return best_labels, float(best_code)
