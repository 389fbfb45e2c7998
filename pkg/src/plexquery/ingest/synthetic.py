"""Synthetic ground-truthed multiplex images with planted regions and cell types."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import SchemaError, SpecError
from .centroids import CellRecord
from .manifest import DTYPE_INFO, Manifest, MultiplexImage

SPOT_SIGMA = 2.0  # px, isotropic, truncated at 3 sigma


@dataclass
class RegionSpec:
    """One planted region: a horizontal band or a circular blob."""

    name: str
    region_id: int
    kind: str  # "band" | "blob"
    y0: int = 0
    y1: int = 0  # band: rows y0 <= y < y1
    cx: int = 0
    cy: int = 0
    radius: int = 0  # blob: disc around (cx, cy)


@dataclass
class LabelRaster:
    """Ground-truth region id per pixel; 0 means background/unlabeled."""

    width: int
    height: int
    data: np.ndarray  # (H, W) u16
    legend: dict[int, str] = field(default_factory=dict)

    def region_at(self, x: int, y: int) -> int:
        return int(self.data[y, x])

    def save(self, raster_path: str | Path, legend_path: str | Path) -> None:
        raster_path = Path(raster_path)
        raster_path.parent.mkdir(parents=True, exist_ok=True)
        self.data.astype("<u2").tofile(raster_path)
        Path(legend_path).write_text(
            json.dumps({str(k): v for k, v in sorted(self.legend.items())}, indent=2)
            + "\n"
        )

    @classmethod
    def load(
        cls, raster_path: str | Path, legend_path: str | Path, width: int, height: int
    ) -> "LabelRaster":
        data = np.fromfile(raster_path, dtype="<u2")
        if data.size != width * height:
            raise SchemaError(
                f"label raster has {data.size} pixels, expected {width * height}"
            )
        legend = {
            int(k): v for k, v in json.loads(Path(legend_path).read_text()).items()
        }
        return cls(width=width, height=height, data=data.reshape(height, width), legend=legend)


@dataclass
class SyntheticSpec:
    """Recipe for a planted-region multiplex image.

    signatures maps region name -> cell type name -> per-channel spot
    amplitudes in [0, 1]; a cell of that type in that region is rendered as a
    Gaussian spot with those amplitudes.
    """

    width: int
    height: int
    markers: list[str]
    regions: list[RegionSpec]
    signatures: dict[str, dict[str, list[float]]]
    n_cells: int
    noise: float = 0.02
    margin: int = 0
    dtype: str = "u16"
    pixel_size_nm: float = 330.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise SpecError("image dimensions must be >= 1")
        if self.dtype not in DTYPE_INFO:
            raise SpecError(f"unsupported dtype {self.dtype!r}")
        if not self.markers:
            raise SpecError("at least one marker required")
        if not self.regions:
            raise SpecError("at least one region required")
        if self.n_cells < 1:
            raise SpecError("n_cells must be >= 1")
        if self.noise < 0:
            raise SpecError("noise must be >= 0")
        ids = [r.region_id for r in self.regions]
        if len(set(ids)) != len(ids):
            raise SpecError("region ids must be unique")
        if any(i < 1 for i in ids):
            raise SpecError("region ids must be >= 1 (0 is background)")
        names = {r.name for r in self.regions}
        for region_name, types in self.signatures.items():
            if region_name not in names:
                raise SpecError(f"signature references unknown region {region_name!r}")
            if not types:
                raise SpecError(f"region {region_name!r} has no cell types")
            for type_name, sig in types.items():
                if len(sig) != len(self.markers):
                    raise SpecError(
                        f"signature ({region_name!r}, {type_name!r}) has "
                        f"{len(sig)} entries for {len(self.markers)} channels"
                    )
        for r in self.regions:
            if r.name not in self.signatures:
                raise SpecError(f"region {r.name!r} has no signatures")

    @classmethod
    def from_json(cls, path: str | Path) -> "SyntheticSpec":
        doc = json.loads(Path(path).read_text())
        try:
            regions = [RegionSpec(**r) for r in doc.pop("regions")]
            return cls(regions=regions, **doc)
        except (TypeError, KeyError) as e:
            raise SpecError(f"bad synthetic spec: {e}") from e


def _paint_regions(spec: SyntheticSpec) -> LabelRaster:
    data = np.zeros((spec.height, spec.width), dtype=np.uint16)
    for r in spec.regions:
        if r.kind == "band":
            if not (0 <= r.y0 < r.y1 <= spec.height):
                raise SpecError(f"band {r.name!r} rows [{r.y0}, {r.y1}) out of range")
            data[r.y0 : r.y1, :] = r.region_id
        elif r.kind == "blob":
            yy, xx = np.ogrid[: spec.height, : spec.width]
            mask = (xx - r.cx) ** 2 + (yy - r.cy) ** 2 <= r.radius**2
            data[mask] = r.region_id
        else:
            raise SpecError(f"unknown region kind {r.kind!r}")
    legend = {r.region_id: r.name for r in spec.regions}
    return LabelRaster(width=spec.width, height=spec.height, data=data, legend=legend)


def _spot_kernel() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    reach = int(np.ceil(3 * SPOT_SIGMA))
    offs = np.arange(-reach, reach + 1)
    dy, dx = np.meshgrid(offs, offs, indexing="ij")
    r2 = dx**2 + dy**2
    keep = r2 <= (3 * SPOT_SIGMA) ** 2
    kernel = np.exp(-r2[keep] / (2 * SPOT_SIGMA**2))
    return dy[keep], dx[keep], kernel


def generate_synthetic(
    spec: SyntheticSpec, seed: int
) -> tuple[MultiplexImage, list[CellRecord], LabelRaster, list[str]]:
    """Render a planted image; pure function of (spec, seed).

    Cells are placed uniformly over labeled pixels (respecting spec.margin
    from the border) and each is drawn as a truncated Gaussian spot whose
    per-channel amplitude is the (region, cell type) signature. Returns the
    quantized image, the cell records, the label raster, and the cell type
    name per cell.
    """
    rng = np.random.default_rng(seed)
    labels = _paint_regions(spec)
    region_by_id = {r.region_id: r for r in spec.regions}

    allowed = labels.data > 0
    m = spec.margin
    if m > 0:
        border = np.zeros_like(allowed)
        border[m : spec.height - m, m : spec.width - m] = True
        allowed &= border
    flat = np.flatnonzero(allowed)
    if flat.size == 0:
        raise SpecError("no placeable pixels (regions empty after margin)")
    replace = flat.size < spec.n_cells
    picks = rng.choice(flat, size=spec.n_cells, replace=replace)
    if not replace:
        picks = np.sort(picks)  # stable cell ordering independent of draw order

    cells: list[CellRecord] = []
    type_names: list[str] = []
    amplitudes = np.zeros((spec.n_cells, len(spec.markers)))
    for i, p in enumerate(picks):
        y, x = divmod(int(p), spec.width)
        region = region_by_id[int(labels.data[y, x])]
        types = spec.signatures[region.name]
        type_name = list(types)[rng.integers(len(types))]
        cells.append(CellRecord(cell_id=i, x=x, y=y))
        type_names.append(type_name)
        amplitudes[i] = types[type_name]

    image = np.zeros((len(spec.markers), spec.height, spec.width))
    dy, dx, kernel = _spot_kernel()
    for i, cell in enumerate(cells):
        ys = cell.y + dy
        xs = cell.x + dx
        ok = (ys >= 0) & (ys < spec.height) & (xs >= 0) & (xs < spec.width)
        np.add.at(
            image,
            (slice(None), ys[ok], xs[ok]),
            amplitudes[i][:, None] * kernel[ok][None, :],
        )

    if spec.noise > 0:
        image += rng.normal(0.0, spec.noise, size=image.shape)
    np.clip(image, 0.0, 1.0, out=image)

    np_dtype, dmax = DTYPE_INFO[spec.dtype]
    quantized = np.rint(image * dmax).astype(np_dtype)

    manifest = Manifest(
        width=spec.width,
        height=spec.height,
        dtype=spec.dtype,
        pixel_size_nm=spec.pixel_size_nm,
        channels=[(name, f"channels/{name}.raw") for name in spec.markers],
    )
    return MultiplexImage(manifest=manifest, data=quantized), cells, labels, type_names
