"""Quantitative evaluation: top-k retrieval accuracy, confusion/IoU against a
ground-truth label raster, code-length comparison across panel sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .community.partition import OUTLIER, CommunityPartition
from .errors import MissingLabels, NoLabeledCells
from .ingest.centroids import CellRecord
from .ingest.synthetic import LabelRaster
from .query.index import SearchIndex
from .query.retrieval import topn_cosine

UNASSIGNED = 0  # predicted-region id for OUTLIER / unmapped-community cells


def topk_accuracy(
    index: SearchIndex,
    panel: str,
    type_labels: dict[int, str],
    k: int,
    queries: list[int],
) -> float:
    """Fraction of queries whose top-k retrieval contains >= 1 same-type cell."""
    if not queries:
        raise ValueError("no queries given")
    missing = [q for q in queries if q not in type_labels]
    if missing:
        raise MissingLabels(f"{len(missing)} query cells lack a type label")
    hits = 0
    for q in queries:
        result = topn_cosine(index, panel, q, n=k)
        target = type_labels[q]
        if any(type_labels.get(c) == target for c in result.cell_ids):
            hits += 1
    return hits / len(queries)


@dataclass
class ConfusionReport:
    """Cell-level confusion of predicted regions (via majority-vote community
    mapping) against ground truth, with per-region IoU and TPR.

    matrix rows follow region_ids (true region); columns are [UNASSIGNED] +
    region_ids (predicted region). OUTLIER cells land in the UNASSIGNED
    column, counting as false negatives for their true region."""

    region_ids: list[int]
    region_names: dict[int, str]
    matrix: np.ndarray  # (R, R+1) int64
    iou: dict[int, float]
    mean_iou: float
    tpr: dict[int, float]
    community_region: dict[int, int]
    n_cells: int

    def to_json_dict(self) -> dict:
        return {
            "region_ids": self.region_ids,
            "region_names": {str(k): v for k, v in self.region_names.items()},
            "columns": [UNASSIGNED] + self.region_ids,
            "matrix": self.matrix.tolist(),
            "iou": {str(k): v for k, v in self.iou.items()},
            "mean_iou": self.mean_iou,
            "tpr": {str(k): v for k, v in self.tpr.items()},
            "community_region": {str(k): v for k, v in self.community_region.items()},
            "n_cells": self.n_cells,
        }


def confusion_iou(
    partition: CommunityPartition,
    cells: list[CellRecord],
    labels: LabelRaster,
) -> ConfusionReport:
    """Majority-vote community -> region mapping, then cell-level confusion.

    Cells on region 0 (background/unlabeled) are excluded entirely. A
    community's region is the majority ground-truth region of its labeled
    members, ties to the lower region id."""
    if len(cells) != len(partition.labels):
        raise ValueError("cells and partition are misaligned")
    true_region = np.array([labels.region_at(c.x, c.y) for c in cells], dtype=np.int64)
    labeled = true_region > 0
    if not labeled.any():
        raise NoLabeledCells("no cell lies on a labeled region")

    community_region: dict[int, int] = {}
    for k in range(partition.n_communities):
        members = (partition.labels == k) & labeled
        if not members.any():
            community_region[k] = UNASSIGNED
            continue
        regions, counts = np.unique(true_region[members], return_counts=True)
        best = counts.max()
        community_region[k] = int(min(regions[counts == best]))  # tie -> lower id

    predicted = np.full(len(cells), UNASSIGNED, dtype=np.int64)
    for k, region in community_region.items():
        predicted[partition.labels == k] = region

    region_ids = sorted(int(r) for r in np.unique(true_region[labeled]))
    row_of = {r: i for i, r in enumerate(region_ids)}
    col_of = {UNASSIGNED: 0}
    col_of.update({r: i + 1 for i, r in enumerate(region_ids)})

    matrix = np.zeros((len(region_ids), len(region_ids) + 1), dtype=np.int64)
    for t, p in zip(true_region[labeled], predicted[labeled]):
        col = col_of.get(int(p), 0)  # prediction outside known regions -> unassigned
        matrix[row_of[int(t)], col] += 1

    iou: dict[int, float] = {}
    tpr: dict[int, float] = {}
    for r in region_ids:
        i = row_of[r]
        tp = int(matrix[i, col_of[r]])
        fn = int(matrix[i].sum()) - tp
        fp = int(matrix[:, col_of[r]].sum()) - tp
        denom = tp + fp + fn
        iou[r] = tp / denom if denom else 0.0
        row_total = int(matrix[i].sum())
        tpr[r] = tp / row_total if row_total else 0.0

    return ConfusionReport(
        region_ids=region_ids,
        region_names={r: labels.legend.get(r, str(r)) for r in region_ids},
        matrix=matrix,
        iou=iou,
        mean_iou=float(np.mean([iou[r] for r in region_ids])),
        tpr=tpr,
        community_region=community_region,
        n_cells=int(labeled.sum()),
    )


def codelength_compare(index: SearchIndex, panel_sets: list[list[str]]) -> list[dict]:
    """Code length per panel set (singletons use the stored partition),
    sorted ascending."""
    rows = []
    for names in panel_sets:
        names = sorted(set(names))
        if len(names) == 1:
            part = index.panel_index(names[0]).partition
        else:
            part = index.fused_partition(names)
        rows.append(
            {
                "panels": names,
                "code_length": float(part.code_length),
                "communities": part.n_communities,
            }
        )
    rows.sort(key=lambda r: r["code_length"])
    return rows


@dataclass
class EvalReport:
    """Aggregate report: top-k table, confusion fragment, code lengths."""

    topk: dict[int, float] = field(default_factory=dict)
    confusion: ConfusionReport | None = None
    codelengths: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "topk": {str(k): v for k, v in sorted(self.topk.items())},
            "confusion": self.confusion.to_json_dict() if self.confusion else None,
            "codelengths": self.codelengths,
        }

    def to_text(self) -> str:
        lines = []
        if self.topk:
            lines.append("top-k accuracy")
            for k, v in sorted(self.topk.items()):
                lines.append(f"  top-{k}: {v:.4f}")
        if self.confusion:
            c = self.confusion
            lines.append(f"confusion over {c.n_cells} labeled cells")
            header = ["true\\pred", "unassigned"] + [
                c.region_names[r] for r in c.region_ids
            ]
            lines.append("  " + "  ".join(f"{h:>12}" for h in header))
            for i, r in enumerate(c.region_ids):
                row = [c.region_names[r]] + [str(v) for v in c.matrix[i]]
                lines.append("  " + "  ".join(f"{v:>12}" for v in row))
            lines.append("per-region IoU / TPR")
            for r in c.region_ids:
                lines.append(
                    f"  {c.region_names[r]:>12}: IoU {c.iou[r]:.4f}  TPR {c.tpr[r]:.4f}"
                )
            lines.append(f"mean IoU: {c.mean_iou:.4f}")
        if self.codelengths:
            lines.append("code lengths (ascending)")
            for row in self.codelengths:
                lines.append(
                    f"  {'+'.join(row['panels']):>20}: {row['code_length']:.6f} bits"
                    f"  (K={row['communities']})"
                )
        return "\n".join(lines) + "\n"
