"""Pseudo-label maps: cells painted as colored discs keyed by community."""

from __future__ import annotations

import colorsys
from pathlib import Path

import numpy as np
from PIL import Image

from ..community.partition import OUTLIER, CommunityPartition

BACKGROUND_INDEX = 0
OUTLIER_INDEX = 1
FIRST_COMMUNITY_INDEX = 2
N_PALETTE = 256
GOLDEN_RATIO_CONJUGATE = 0.61803398875
SMALL_PATCH_LIMIT = 31  # <= this: disc radius patch_size//2, else fixed 8 px


def community_color(community: int) -> tuple[int, int, int]:
    """Deterministic palette keyed by community id (golden-angle hues)."""
    hue = (community * GOLDEN_RATIO_CONJUGATE) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.65, 0.95)
    return int(r * 255), int(g * 255), int(b * 255)


def _palette() -> list[int]:
    flat = [0, 0, 0, 128, 128, 128]  # background black, outlier gray
    for i in range(N_PALETTE - FIRST_COMMUNITY_INDEX):
        flat.extend(community_color(i))
    return flat


def disc_radius(patch_size: int) -> int:
    return max(1, patch_size // 2) if patch_size <= SMALL_PATCH_LIMIT else 8


def render_pseudo_label_map(
    partition: CommunityPartition,
    coords: np.ndarray,
    image_size: tuple[int, int],
    patch_size: int,
) -> Image.Image:
    """Indexed-color raster with one filled disc per cell; OUTLIER is gray."""
    width, height = image_size
    canvas = np.zeros((height, width), dtype=np.uint8)
    radius = disc_radius(patch_size)
    offs = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(offs, offs, indexing="ij")
    inside = dy**2 + dx**2 <= radius**2
    dy, dx = dy[inside], dx[inside]

    coords = np.asarray(coords)
    for (x, y), label in zip(coords, partition.labels):
        if label == OUTLIER:
            idx = OUTLIER_INDEX
        else:
            idx = FIRST_COMMUNITY_INDEX + int(label) % (N_PALETTE - FIRST_COMMUNITY_INDEX)
        ys = (int(y) + dy).clip(0, height - 1)
        xs = (int(x) + dx).clip(0, width - 1)
        canvas[ys, xs] = idx

    img = Image.fromarray(canvas, mode="P")
    img.putpalette(_palette())
    return img


def save_pseudo_label_map(
    partition: CommunityPartition,
    coords: np.ndarray,
    image_size: tuple[int, int],
    patch_size: int,
    path: str | Path,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    render_pseudo_label_map(partition, coords, image_size, patch_size).save(
        path, format="PNG"
    )
    return path
