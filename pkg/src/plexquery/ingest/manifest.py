"""Multiplex raster manifest: geometry, channels, raw planar IO."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import MissingFile, SchemaError, SizeMismatch

DTYPE_INFO = {
    "u8": (np.dtype("u1"), 255),
    "u16": (np.dtype("<u2"), 65535),
}


class PanelWarning(UserWarning):
    """Panel composition outside the recommended range."""


@dataclass
class Manifest:
    """Geometry and channel listing of one multiplex image."""

    width: int
    height: int
    dtype: str
    pixel_size_nm: float
    channels: list[tuple[str, str]]  # (marker name, raster file)
    base_dir: Path = field(default_factory=Path)

    @property
    def marker_names(self) -> list[str]:
        return [name for name, _ in self.channels]

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def numpy_dtype(self) -> np.dtype:
        return DTYPE_INFO[self.dtype][0]

    @property
    def dtype_max(self) -> int:
        return DTYPE_INFO[self.dtype][1]

    def raster_path(self, marker: str) -> Path:
        for name, file in self.channels:
            if name == marker:
                return self.base_dir / file
        raise SchemaError(f"unknown marker {marker!r}")

    def channel_index(self, marker: str) -> int:
        for i, (name, _) in enumerate(self.channels):
            if name == marker:
                return i
        raise SchemaError(f"unknown marker {marker!r}")

    def to_json_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "dtype": self.dtype,
            "pixel_size_nm": self.pixel_size_nm,
            "channels": [{"name": n, "file": f} for n, f in self.channels],
        }


def _validate_manifest_fields(doc: dict) -> None:
    required = {"width", "height", "dtype", "pixel_size_nm", "channels"}
    missing = required - set(doc)
    if missing:
        raise SchemaError(f"manifest missing keys: {sorted(missing)}")
    if doc["dtype"] not in DTYPE_INFO:
        raise SchemaError(f"unsupported dtype {doc['dtype']!r}, expected u8 or u16")
    if not isinstance(doc["width"], int) or not isinstance(doc["height"], int):
        raise SchemaError("width/height must be integers")
    if doc["width"] < 1 or doc["height"] < 1:
        raise SchemaError("width and height must be >= 1")
    if not isinstance(doc["channels"], list) or not doc["channels"]:
        raise SchemaError("channels must be a non-empty list")
    names = []
    for ch in doc["channels"]:
        if not isinstance(ch, dict) or "name" not in ch or "file" not in ch:
            raise SchemaError("each channel needs 'name' and 'file'")
        if not ch["name"]:
            raise SchemaError("channel names must be non-empty")
        names.append(ch["name"])
    if len(set(names)) != len(names):
        raise SchemaError("duplicate marker name in manifest")


def load_manifest(path: str | Path) -> Manifest:
    """Parse and validate a manifest JSON; size-check every referenced raster."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"manifest is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError("manifest root must be an object")
    _validate_manifest_fields(doc)

    manifest = Manifest(
        width=doc["width"],
        height=doc["height"],
        dtype=doc["dtype"],
        pixel_size_nm=float(doc["pixel_size_nm"]),
        channels=[(ch["name"], ch["file"]) for ch in doc["channels"]],
        base_dir=path.parent,
    )

    expected = manifest.width * manifest.height * manifest.numpy_dtype.itemsize
    for name, file in manifest.channels:
        raster = manifest.base_dir / file
        if not raster.exists():
            raise MissingFile(f"raster for {name!r} not found: {raster}")
        actual = raster.stat().st_size
        if actual != expected:
            raise SizeMismatch(
                f"raster {raster} is {actual} bytes, expected {expected}"
            )
    return manifest


@dataclass
class MultiplexImage:
    """C-channel planar raster held in native integer dtype."""

    manifest: Manifest
    data: np.ndarray  # (C, H, W)

    def __post_init__(self):
        c, h, w = self.data.shape
        if (c, h, w) != (self.manifest.n_channels, self.manifest.height, self.manifest.width):
            raise SchemaError(
                f"raster shape {self.data.shape} does not match manifest "
                f"({self.manifest.n_channels}, {self.manifest.height}, {self.manifest.width})"
            )


def load_image(manifest: Manifest) -> MultiplexImage:
    """Read all channel rasters (raw little-endian planar row-major)."""
    shape = (manifest.height, manifest.width)
    planes = []
    for name, _ in manifest.channels:
        raw = np.fromfile(manifest.raster_path(name), dtype=manifest.numpy_dtype)
        planes.append(raw.reshape(shape))
    return MultiplexImage(manifest=manifest, data=np.stack(planes))


def save_image(image: MultiplexImage, out_dir: str | Path) -> Path:
    """Write manifest.json plus one raw raster per channel; returns manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = image.manifest
    for i, (name, file) in enumerate(manifest.channels):
        target = out_dir / file
        target.parent.mkdir(parents=True, exist_ok=True)
        image.data[i].astype(manifest.numpy_dtype).tofile(target)
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest.to_json_dict(), indent=2) + "\n")
    return manifest_path


@dataclass
class PanelDefinition:
    """Named subset of manifest markers handled by one encoder."""

    name: str
    markers: list[str]

    def __post_init__(self):
        if not self.name:
            raise SchemaError("panel name must be non-empty")
        if not self.markers:
            raise SchemaError(f"panel {self.name!r} has no markers")
        if len(set(self.markers)) != len(self.markers):
            raise SchemaError(f"panel {self.name!r} lists a marker twice")
        if not 5 <= len(self.markers) <= 8:
            warnings.warn(
                f"panel {self.name!r} has {len(self.markers)} markers; "
                "5-8 markers work best",
                PanelWarning,
                stacklevel=2,
            )

    def validate_against(self, manifest: Manifest) -> None:
        known = set(manifest.marker_names)
        unknown = [m for m in self.markers if m not in known]
        if unknown:
            raise SchemaError(f"panel {self.name!r} references unknown markers {unknown}")
