"""Loading, validation, patch extraction, and synthetic data generation."""

from .centroids import CellRecord, load_centroids, save_centroids
from .manifest import (
    Manifest,
    MultiplexImage,
    PanelDefinition,
    PanelWarning,
    load_image,
    load_manifest,
    save_image,
)
from .patches import DEFAULT_PATCH_SIZES, PatchSet, extract_patches, in_bounds_cells
from .synthetic import (
    SPOT_SIGMA,
    LabelRaster,
    RegionSpec,
    SyntheticSpec,
    generate_synthetic,
)

__all__ = [
    "CellRecord",
    "DEFAULT_PATCH_SIZES",
    "LabelRaster",
    "Manifest",
    "MultiplexImage",
    "PanelDefinition",
    "PanelWarning",
    "PatchSet",
    "RegionSpec",
    "SPOT_SIGMA",
    "SyntheticSpec",
    "extract_patches",
    "generate_synthetic",
    "in_bounds_cells",
    "load_centroids",
    "load_image",
    "load_manifest",
    "save_centroids",
    "save_image",
]
