"""Community index table: the CSV interchange for query serving.

Schema: `cell_id,x,y,<panel>_community...,<marker>_mean...` with panels in
config order and markers in manifest order. Community ids are integers
(-1 = outlier); intensities are written with 9 significant digits, which
makes export -> load -> export byte-identical."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..community.partition import OUTLIER, CommunityPartition
from ..errors import DuplicateCell, IoError, SchemaError
from ..ingest.manifest import Manifest, PanelDefinition
from ..query.index import PanelIndex, SearchIndex


def _format_value(v: float) -> str:
    return f"{v:.9g}"


def _header(panel_names: list[str], markers: list[str]) -> list[str]:
    return (
        ["cell_id", "x", "y"]
        + [f"{p}_community" for p in panel_names]
        + [f"{m}_mean" for m in markers]
    )


def export_index(index: SearchIndex, path: str | Path) -> int:
    """Write one row per cell; returns the row count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    panel_names = list(index.panels)
    header = _header(panel_names, index.markers)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, cid in enumerate(index.cell_ids):
                row = [
                    str(int(cid)),
                    str(int(index.coords[i, 0])),
                    str(int(index.coords[i, 1])),
                ]
                for p in panel_names:
                    row.append(str(int(index.panels[p].partition.labels[i])))
                row.extend(_format_value(v) for v in index.intensities[i])
                writer.writerow(row)
    except OSError as e:
        raise IoError(f"cannot write index table {path}: {e}") from e
    return index.n_cells


def load_index(
    path: str | Path,
    manifest: Manifest,
    panels: list[PanelDefinition],
    intensity_patch_size: int = 25,
    seed: int = 0,
    min_size: int = 5,
) -> SearchIndex:
    """Rebuild a partial index (communities + intensities) from the CSV.

    The result answers community_retrieve, quick_search, and
    expression_profile; embedding-based modes raise CapabilityMissing."""
    path = Path(path)
    if not path.exists():
        raise IoError(f"index table not found: {path}")
    panel_names = [p.name for p in panels]
    expected = _header(panel_names, manifest.marker_names)
    cell_ids: list[int] = []
    xs: list[int] = []
    ys: list[int] = []
    communities: list[list[int]] = [[] for _ in panels]
    intensities: list[list[float]] = []
    seen: set[int] = set()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise SchemaError(
                f"index table header mismatch:\n  got      {header}\n"
                f"  expected {expected}"
            )
        n_markers = len(manifest.marker_names)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise SchemaError(f"line {lineno}: {len(row)} fields, expected {len(expected)}")
            cid = int(row[0])
            if cid in seen:
                raise DuplicateCell(f"line {lineno}: duplicate cell {cid}")
            seen.add(cid)
            cell_ids.append(cid)
            xs.append(int(row[1]))
            ys.append(int(row[2]))
            for pi in range(len(panels)):
                communities[pi].append(int(row[3 + pi]))
            intensities.append([float(v) for v in row[3 + len(panels) :]])
            assert len(intensities[-1]) == n_markers

    ids = np.array(cell_ids, dtype=np.int64)
    coords = np.stack([xs, ys], axis=1).astype(float)
    panel_map: dict[str, PanelIndex] = {}
    for pi, panel in enumerate(panels):
        labels = np.array(communities[pi], dtype=np.int64)
        non_outlier = labels[labels != OUTLIER]
        k = int(non_outlier.max()) + 1 if non_outlier.size else 0
        partition = CommunityPartition(
            node_ids=ids.copy(),
            labels=labels,
            n_communities=k,
            code_length=float("nan"),  # not recoverable from the CSV
        )
        panel_map[panel.name] = PanelIndex(
            panel=panel,
            patch_size=intensity_patch_size,
            partition=partition,
        )
    return SearchIndex(
        markers=list(manifest.marker_names),
        cell_ids=ids,
        coords=coords,
        intensities=np.array(intensities, dtype=float),
        intensity_patch_size=intensity_patch_size,
        panels=panel_map,
        seed=seed,
        min_size=min_size,
    )
