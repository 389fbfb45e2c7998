"""Full binary snapshot of a SearchIndex for fast reload (topn-capable)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..community.partition import CommunityPartition
from ..graph.build import PatchGraph
from ..ingest.manifest import PanelDefinition
from ..query.index import PanelIndex, SearchIndex
from ..trainer.pca import PcaModel
from .container import load_arrays, save_arrays


def save_snapshot(index: SearchIndex, stem: str | Path) -> tuple[Path, Path]:
    """Write <stem>.bin (arrays) and <stem>.json (structure); deterministic."""
    stem = Path(stem)
    arrays: dict[str, np.ndarray] = {
        "cell_ids": index.cell_ids,
        "coords": index.coords,
        "intensities": index.intensities,
    }
    meta: dict = {
        "markers": index.markers,
        "intensity_patch_size": index.intensity_patch_size,
        "seed": index.seed,
        "min_size": index.min_size,
        "panels": [],
    }
    for name, p in index.panels.items():
        if p.pca is None or p.reduced is None or p.graph is None:
            raise ValueError(
                f"panel {name!r} is partial (CSV-level); snapshot needs full artifacts"
            )
        prefix = f"panel/{name}/"
        arrays[prefix + "pca_mean"] = p.pca.mean
        arrays[prefix + "pca_components"] = p.pca.components
        arrays[prefix + "pca_variance"] = p.pca.explained_variance
        arrays[prefix + "reduced"] = p.reduced
        arrays[prefix + "labels"] = p.partition.labels
        arrays[prefix + "edges"] = p.graph.edges
        arrays[prefix + "weights"] = p.graph.weights
        meta["panels"].append(
            {
                "name": name,
                "markers": p.panel.markers,
                "patch_size": p.patch_size,
                "n_communities": p.partition.n_communities,
                "code_length": p.partition.code_length,
            }
        )
    bin_path = stem.with_suffix(".bin")
    meta_path = stem.with_suffix(".json")
    save_arrays(bin_path, arrays)
    meta_path.parent.mkdir(parents=True, exist_ok=True)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return bin_path, meta_path


def load_snapshot(stem: str | Path) -> SearchIndex:
    import warnings

    stem = Path(stem)
    arrays = load_arrays(stem.with_suffix(".bin"))
    meta = json.loads(stem.with_suffix(".json").read_text())
    cell_ids = arrays["cell_ids"]
    coords = arrays["coords"]
    panels: dict[str, PanelIndex] = {}
    for pm in meta["panels"]:
        name = pm["name"]
        prefix = f"panel/{name}/"
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # panel size warning already given at build
            panel = PanelDefinition(name=name, markers=pm["markers"])
        partition = CommunityPartition(
            node_ids=cell_ids.copy(),
            labels=arrays[prefix + "labels"],
            n_communities=pm["n_communities"],
            code_length=pm["code_length"],
        )
        graph = PatchGraph(
            node_ids=cell_ids.copy(),
            coords=coords.copy(),
            edges=arrays[prefix + "edges"],
            weights=arrays[prefix + "weights"],
        )
        pca = PcaModel(
            mean=arrays[prefix + "pca_mean"],
            components=arrays[prefix + "pca_components"],
            explained_variance=arrays[prefix + "pca_variance"],
        )
        panels[name] = PanelIndex(
            panel=panel,
            patch_size=pm["patch_size"],
            partition=partition,
            pca=pca,
            reduced=arrays[prefix + "reduced"],
            graph=graph,
        )
    return SearchIndex(
        markers=meta["markers"],
        cell_ids=cell_ids,
        coords=coords,
        intensities=arrays["intensities"],
        intensity_patch_size=meta["intensity_patch_size"],
        panels=panels,
        seed=meta["seed"],
        min_size=meta["min_size"],
    )
