"""Cell-centered patch extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyResult
from .centroids import CellRecord
from .manifest import MultiplexImage, PanelDefinition

DEFAULT_PATCH_SIZES = (25, 175)


@dataclass
class PatchSet:
    """Square multi-channel patches over one panel, rescaled to [0, 1]."""

    panel: PanelDefinition
    patch_size: int
    cells: list[CellRecord]
    pixels: np.ndarray  # (N, C, S, S) float64
    dropped: int = 0

    @property
    def cell_ids(self) -> np.ndarray:
        return np.array([c.cell_id for c in self.cells], dtype=np.int64)

    @property
    def coords(self) -> np.ndarray:
        return np.array([[c.x, c.y] for c in self.cells], dtype=np.float64)

    @property
    def channel_means(self) -> np.ndarray:
        """Per-patch per-channel mean intensity, shape (N, C)."""
        return self.pixels.mean(axis=(2, 3))

    def subset(self, indices: np.ndarray) -> "PatchSet":
        return PatchSet(
            panel=self.panel,
            patch_size=self.patch_size,
            cells=[self.cells[i] for i in indices],
            pixels=self.pixels[indices],
            dropped=0,
        )


def in_bounds_cells(
    cells: list[CellRecord], width: int, height: int, patch_size: int
) -> list[CellRecord]:
    """Cells whose patch of the given size lies fully inside the image."""
    h = patch_size // 2
    return [
        c
        for c in cells
        if h <= c.x <= width - 1 - h and h <= c.y <= height - 1 - h
    ]


def extract_patches(
    image: MultiplexImage,
    cells: list[CellRecord],
    panel: PanelDefinition,
    patch_size: int,
) -> PatchSet:
    """One patch per retained cell; border-crossing cells are dropped and counted.

    Pixel (c, i, j) of patch n is the raster value for panel.markers[c] at
    (x_n - S//2 + j, y_n - S//2 + i), divided by the dtype maximum.
    """
    if patch_size % 2 != 1 or patch_size < 1:
        raise ValueError(f"patch_size must be odd and positive, got {patch_size}")
    panel.validate_against(image.manifest)

    manifest = image.manifest
    kept = in_bounds_cells(cells, manifest.width, manifest.height, patch_size)
    dropped = len(cells) - len(kept)
    if not kept:
        raise EmptyResult(
            f"all {len(cells)} cells dropped at the {patch_size}px border rule"
        )

    ch_idx = [manifest.channel_index(m) for m in panel.markers]
    planes = image.data[ch_idx]  # (C, H, W)
    h = patch_size // 2
    dmax = float(manifest.dtype_max)

    pixels = np.empty((len(kept), len(ch_idx), patch_size, patch_size))
    for n, cell in enumerate(kept):
        window = planes[:, cell.y - h : cell.y + h + 1, cell.x - h : cell.x + h + 1]
        pixels[n] = window / dmax

    return PatchSet(
        panel=panel,
        patch_size=patch_size,
        cells=kept,
        pixels=pixels,
        dropped=dropped,
    )
