"""Training orchestration, PCA reduction, pseudo-label map rendering."""

from .loop import TrainConfig, TrainResult, generate_pseudo_labels, train_panel
from .pca import DEFAULT_COMPONENTS, PcaModel, pca_fit, pca_project
from .render import (
    community_color,
    disc_radius,
    render_pseudo_label_map,
    save_pseudo_label_map,
)

__all__ = [
    "DEFAULT_COMPONENTS",
    "PcaModel",
    "TrainConfig",
    "TrainResult",
    "community_color",
    "disc_radius",
    "generate_pseudo_labels",
    "pca_fit",
    "pca_project",
    "render_pseudo_label_map",
    "save_pseudo_label_map",
    "train_panel",
]
