"""Iterative per-panel training: pseudo-labels, memory dictionary, SGD epochs."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..community.infomap import infomap
from ..community.partition import OUTLIER, CommunityPartition
from ..encoder.losses import LossConfig
from ..encoder.memory import MemoryDictionary, momentum_update
from ..encoder.model import EmbeddingSet, EncoderParams, forward, init_params
from ..encoder.step import step_with_triplet_fallback
from ..errors import NonFinite
from ..graph.build import SIGMA_PATCH_FACTOR, GraphConfig, PatchGraph, build_knn_graph
from ..ingest.patches import PatchSet

DEFAULT_MIN_COMMUNITY = 5
DEFAULT_CONVERGENCE_REL = 0.005
DEFAULT_CONVERGENCE_EPOCHS = 2


@dataclass
class TrainConfig:
    epochs_max: int = 20
    batch_size: int = 256
    lr: float = 3e-4
    graph: GraphConfig = field(default_factory=GraphConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    min_size: int = DEFAULT_MIN_COMMUNITY
    seed: int = 0
    convergence_rel: float = DEFAULT_CONVERGENCE_REL
    convergence_epochs: int = DEFAULT_CONVERGENCE_EPOCHS
    encoder_dim: int = 64
    gate_kernel_size: int = 3
    threads: int = 1

    def __post_init__(self):
        if self.epochs_max < 0:
            raise ValueError("epochs_max must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.min_size < 1:
            raise ValueError("min_size must be >= 1")
        if self.convergence_rel <= 0:
            raise ValueError("convergence_rel must be > 0")

    @staticmethod
    def sigma_for(patch_size: int) -> float:
        return float(SIGMA_PATCH_FACTOR * patch_size)


@dataclass
class TrainResult:
    params: EncoderParams
    initial_params: EncoderParams
    partitions: list[CommunityPartition]  # per epoch, index 0 = untrained
    code_lengths: list[float]
    records: list[dict]  # JSON-able per-epoch log records
    embeddings: EmbeddingSet  # final-epoch embeddings
    graph: PatchGraph  # final-epoch graph

    @property
    def partition(self) -> CommunityPartition:
        return self.partitions[-1]


def generate_pseudo_labels(
    params: EncoderParams,
    patches: PatchSet,
    coords: np.ndarray,
    cfg: TrainConfig,
) -> tuple[EmbeddingSet, PatchGraph, CommunityPartition]:
    """forward -> kNN graph -> community detection."""
    emb = forward(params, patches)
    graph = build_knn_graph(emb, coords, cfg.graph, threads=cfg.threads)
    partition = infomap(graph, min_size=cfg.min_size, seed=cfg.seed)
    return emb, graph, partition


def train_panel(
    patches: PatchSet,
    coords: np.ndarray,
    cfg: TrainConfig,
) -> TrainResult:
    """Run the iterative loop; deterministic for a fixed cfg.seed.

    Each epoch: rebuild the memory dictionary from the current partition,
    sweep shuffled mini-batches (gradient step + centroid momentum update),
    then regenerate pseudo-labels and the code length. Stops at epochs_max
    or when the relative code-length change stays below cfg.convergence_rel
    for cfg.convergence_epochs consecutive epochs."""
    n = len(patches.cells)
    if n < 2 * cfg.batch_size:
        warnings.warn(
            f"{n} samples is below 2 x batch_size ({2 * cfg.batch_size}); "
            "mini-batch statistics will be coarse",
            stacklevel=2,
        )
    rng = np.random.default_rng(cfg.seed)
    params = init_params(
        n_channels=patches.pixels.shape[1],
        patch_size=patches.patch_size,
        feature_dim=cfg.encoder_dim,
        gate_kernel_size=cfg.gate_kernel_size,
        seed=cfg.seed,
    )
    initial_params = params.copy()

    emb, graph, partition = generate_pseudo_labels(params, patches, coords, cfg)
    partitions = [partition]
    code_lengths = [partition.code_length]
    records = [_epoch_record(0, None, partition)]

    plateau = 0
    for epoch in range(1, cfg.epochs_max + 1):
        labeled = np.flatnonzero(partition.labels != OUTLIER)
        if labeled.size < 2 or partition.n_communities < 1:
            warnings.warn(
                f"epoch {epoch}: not enough labeled samples to train", stacklevel=2
            )
            break
        memory = MemoryDictionary.from_embeddings(
            emb.features, partition.labels, partition.n_communities
        )
        order = labeled[rng.permutation(labeled.size)]
        losses = []
        for start in range(0, order.size, cfg.batch_size):
            batch_idx = order[start : start + cfg.batch_size]
            if batch_idx.size < 2:
                continue
            batch = patches.subset(batch_idx)
            batch_labels = partition.labels[batch_idx]
            batch_emb = forward(params, batch)  # pre-step features for Eq.-4 update
            params, loss = step_with_triplet_fallback(
                params, batch, batch_labels, memory, cfg.loss, cfg.lr
            )
            if not math.isfinite(loss):
                raise NonFinite(
                    f"epoch {epoch}, batch at {start}: loss {loss}; "
                    f"lr={cfg.lr}, tau={cfg.loss.tau}"
                )
            memory = momentum_update(
                memory, batch_emb.features, batch_labels, cfg.loss.mu
            )
            losses.append(loss)

        emb, graph, partition = generate_pseudo_labels(params, patches, coords, cfg)
        partitions.append(partition)
        code_lengths.append(partition.code_length)
        records.append(
            _epoch_record(epoch, float(np.mean(losses)) if losses else None, partition)
        )

        prev, curr = code_lengths[-2], code_lengths[-1]
        rel = abs(curr - prev) / prev if prev > 0 else 0.0
        plateau = plateau + 1 if rel < cfg.convergence_rel else 0
        if plateau >= cfg.convergence_epochs:
            break

    return TrainResult(
        params=params,
        initial_params=initial_params,
        partitions=partitions,
        code_lengths=code_lengths,
        records=records,
        embeddings=emb,
        graph=graph,
    )


def _epoch_record(epoch: int, loss: float | None, partition: CommunityPartition) -> dict:
    return {
        "epoch": epoch,
        "loss": loss,
        "K": partition.n_communities,
        "code_length": float(partition.code_length),
        "outliers": partition.n_outliers,
    }
