"""Encoder checkpoints: binary parameter container plus JSON sidecar."""

from __future__ import annotations

import json
from pathlib import Path

from ..encoder.model import EncoderParams
from .container import load_arrays, save_arrays


def save_checkpoint(
    stem: str | Path,
    params: EncoderParams,
    panel: str,
    epoch: int,
    config: dict | None = None,
) -> tuple[Path, Path]:
    """Write <stem>.bin (f64 arrays) and <stem>.json metadata."""
    stem = Path(stem)
    bin_path = stem.with_suffix(".bin")
    meta_path = stem.with_suffix(".json")
    save_arrays(
        bin_path,
        {
            "proj": params.proj,
            "bias": params.bias,
            "gate_kernel": params.gate_kernel,
        },
    )
    meta = {
        "panel": panel,
        "dims": {
            "feature_dim": params.feature_dim,
            "n_channels": params.n_channels,
            "patch_size": params.patch_size,
            "gate_kernel_size": int(params.gate_kernel.shape[0]),
            "embedding_dim": params.embedding_dim,
        },
        "config": config or {},
        "epoch": epoch,
    }
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return bin_path, meta_path


def load_checkpoint(stem: str | Path) -> tuple[EncoderParams, dict]:
    stem = Path(stem)
    arrays = load_arrays(stem.with_suffix(".bin"))
    meta = json.loads(stem.with_suffix(".json").read_text())
    dims = meta["dims"]
    params = EncoderParams(
        proj=arrays["proj"],
        bias=arrays["bias"],
        gate_kernel=arrays["gate_kernel"],
        n_channels=dims["n_channels"],
        patch_size=dims["patch_size"],
    )
    return params, meta
