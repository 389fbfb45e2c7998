"""Community partitions used as pseudo-labels."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

OUTLIER = -1


@dataclass
class CommunityPartition:
    """Per-node community labels plus the partition's code length in bits.

    Non-outlier labels are contiguous 0..K-1; nodes in communities smaller
    than the training min_size carry the OUTLIER sentinel (-1)."""

    node_ids: np.ndarray  # (N,) int64, aligned with labels
    labels: np.ndarray  # (N,) int64, OUTLIER = -1
    n_communities: int
    code_length: float  # bits

    @property
    def n_outliers(self) -> int:
        return int(np.sum(self.labels == OUTLIER))

    def label_of(self, cell_id: int) -> int:
        idx = np.flatnonzero(self.node_ids == cell_id)
        if idx.size == 0:
            raise KeyError(f"cell {cell_id} not in partition")
        return int(self.labels[idx[0]])

    def members(self, community: int) -> np.ndarray:
        """Cell ids belonging to one community."""
        return self.node_ids[self.labels == community]

    def community_sizes(self) -> np.ndarray:
        sizes = np.zeros(self.n_communities, dtype=np.int64)
        for k in range(self.n_communities):
            sizes[k] = int(np.sum(self.labels == k))
        return sizes


def export_partition_csv(partition: CommunityPartition, path: str | Path) -> int:
    """Write `cell_id,community` rows; OUTLIER as -1."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_id", "community"])
        for cid, lab in zip(partition.node_ids, partition.labels):
            writer.writerow([int(cid), int(lab)])
    return len(partition.node_ids)


def load_partition_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read back (node_ids, labels) from export_partition_csv output."""
    path = Path(path)
    ids = []
    labels = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["cell_id", "community"]:
            raise ValueError(f"unexpected header {header}")
        for row in reader:
            ids.append(int(row[0]))
            labels.append(int(row[1]))
    return np.array(ids, dtype=np.int64), np.array(labels, dtype=np.int64)
