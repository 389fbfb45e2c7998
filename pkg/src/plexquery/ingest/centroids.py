"""Cell centroid records and CSV IO."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from ..errors import DuplicateId, MissingFile, OutOfBounds, ParseError
from .manifest import Manifest

CENTROID_HEADER = ["cell_id", "x", "y"]


@dataclass(frozen=True)
class CellRecord:
    """One detected cell: id plus pixel coordinates of the patch center."""

    cell_id: int
    x: int
    y: int


def load_centroids(path: str | Path, manifest: Manifest) -> list[CellRecord]:
    """Parse a `cell_id,x,y` CSV, enforcing id uniqueness and image bounds."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"centroid file not found: {path}")
    records: list[CellRecord] = []
    seen: set[int] = set()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CENTROID_HEADER:
            raise ParseError(f"expected header {CENTROID_HEADER}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"line {lineno}: expected 3 fields, got {len(row)}")
            try:
                cell_id, x, y = (int(v) for v in row)
            except ValueError as e:
                raise ParseError(f"line {lineno}: {e}") from e
            if cell_id < 0:
                raise ParseError(f"line {lineno}: cell_id must be >= 0")
            if cell_id in seen:
                raise DuplicateId(f"line {lineno}: duplicate cell_id {cell_id}")
            if not (0 <= x < manifest.width and 0 <= y < manifest.height):
                raise OutOfBounds(
                    f"line {lineno}: ({x}, {y}) outside "
                    f"{manifest.width}x{manifest.height}"
                )
            seen.add(cell_id)
            records.append(CellRecord(cell_id, x, y))
    return records


def save_centroids(records: list[CellRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CENTROID_HEADER)
        for r in records:
            writer.writerow([r.cell_id, r.x, r.y])
