"""Per-panel patch encoder: shared per-channel projection gated by channel attention.

The encoder maps an (N, C, S, S) patch tensor to unit-norm embeddings of
dimension D = d*C. Each channel's flattened pixels go through one shared
linear projection; a one-dimensional cross-channel attention kernel over the
per-channel mean intensities produces a sigmoid gate that scales each
channel's d-vector before concatenation and L2 normalization. All gradients
are computed analytically (see backward)."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ShapeMismatch
from ..ingest.patches import PatchSet

NORM_FLOOR = 1e-30  # keeps all-zero feature vectors finite


@dataclass
class EncoderParams:
    """Trainable state: shared projection, bias, and channel-gate kernel."""

    proj: np.ndarray  # (d, S*S), shared across channels
    bias: np.ndarray  # (d,)
    gate_kernel: np.ndarray  # (k_e,), odd length
    n_channels: int
    patch_size: int

    @property
    def feature_dim(self) -> int:
        return self.proj.shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.feature_dim * self.n_channels

    def copy(self) -> "EncoderParams":
        return replace(
            self,
            proj=self.proj.copy(),
            bias=self.bias.copy(),
            gate_kernel=self.gate_kernel.copy(),
        )


def init_params(
    n_channels: int,
    patch_size: int,
    feature_dim: int = 64,
    gate_kernel_size: int = 3,
    seed: int = 0,
) -> EncoderParams:
    """Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization."""
    if gate_kernel_size % 2 != 1:
        raise ValueError("gate_kernel_size must be odd")
    rng = np.random.default_rng(seed)
    s2 = patch_size * patch_size
    bound = 1.0 / np.sqrt(s2)
    proj = rng.uniform(-bound, bound, size=(feature_dim, s2))
    bias = rng.uniform(-bound, bound, size=feature_dim)
    kb = 1.0 / np.sqrt(gate_kernel_size)
    gate_kernel = rng.uniform(-kb, kb, size=gate_kernel_size)
    return EncoderParams(
        proj=proj,
        bias=bias,
        gate_kernel=gate_kernel,
        n_channels=n_channels,
        patch_size=patch_size,
    )


@dataclass
class EmbeddingSet:
    """Unit-norm feature rows for one panel's patches."""

    features: np.ndarray  # (N, D)
    cell_ids: np.ndarray  # (N,)
    panel: str


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def eca_gate(params: EncoderParams, channel_means: np.ndarray) -> np.ndarray:
    """Sigmoid gate per channel from a zero-padded 1-d cross-channel convolution.

    gate_c = sigmoid(sum_j w_j * mean_{c+j}) for j in [-(k-1)/2, (k-1)/2],
    with means outside [0, C) treated as zero.
    """
    means = np.atleast_2d(np.asarray(channel_means, dtype=float))
    a = _gate_preactivation(params.gate_kernel, means)
    gates = _sigmoid(a)
    return gates[0] if np.ndim(channel_means) == 1 else gates


def _gate_preactivation(kernel: np.ndarray, means: np.ndarray) -> np.ndarray:
    """a[n, c] = sum_t kernel[t] * means[n, c + t - h], zero-padded ends."""
    n, c = means.shape
    h = len(kernel) // 2
    padded = np.zeros((n, c + 2 * h))
    padded[:, h : h + c] = means
    a = np.zeros((n, c))
    for t, w in enumerate(kernel):
        a += w * padded[:, t : t + c]
    return a


def forward_with_cache(params: EncoderParams, pixels: np.ndarray):
    """Embed patches and keep intermediates needed by backward().

    Returns (features, cache): features is (N, d*C) with unit rows.
    """
    if pixels.ndim != 4:
        raise ShapeMismatch(f"expected (N, C, S, S) pixels, got {pixels.shape}")
    n, c, s, s2_ = pixels.shape
    if c != params.n_channels:
        raise ShapeMismatch(
            f"patch has {c} channels, encoder trained with {params.n_channels}"
        )
    if s != params.patch_size or s2_ != params.patch_size:
        raise ShapeMismatch(
            f"patch size {s}x{s2_} does not match encoder size {params.patch_size}"
        )
    d = params.feature_dim
    x = pixels.reshape(n, c, s * s)
    means = x.mean(axis=2)  # (N, C)
    a = _gate_preactivation(params.gate_kernel, means)
    gates = _sigmoid(a)  # (N, C)
    z = x.reshape(n * c, s * s) @ params.proj.T + params.bias
    z = z.reshape(n, c, d)
    v = (gates[:, :, None] * z).reshape(n, c * d)
    norms = np.maximum(np.linalg.norm(v, axis=1), NORM_FLOOR)
    features = v / norms[:, None]
    cache = {
        "x": x,
        "means": means,
        "gates": gates,
        "z": z,
        "norms": norms,
        "features": features,
    }
    return features, cache


def forward(params: EncoderParams, patches: PatchSet) -> EmbeddingSet:
    """Embed a PatchSet; rows are L2-normalized."""
    features, _ = forward_with_cache(params, patches.pixels)
    return EmbeddingSet(
        features=features, cell_ids=patches.cell_ids, panel=patches.panel.name
    )


def backward(params: EncoderParams, cache: dict, d_features: np.ndarray) -> dict:
    """Gradients of a scalar loss wrt params, given d(loss)/d(features).

    Backpropagates through L2 normalization, concatenation, the channel
    gate, and the shared projection. Returns {"proj", "bias", "gate_kernel"}.
    """
    x = cache["x"]  # (N, C, S2)
    n, c, s2 = x.shape
    d = params.feature_dim
    e = cache["features"]
    norms = cache["norms"]
    gates = cache["gates"]
    z = cache["z"]

    # through e = v / ||v||
    inner = np.sum(d_features * e, axis=1, keepdims=True)
    dv = (d_features - inner * e) / norms[:, None]
    dv = dv.reshape(n, c, d)

    dz = gates[:, :, None] * dv
    dgate = np.sum(dv * z, axis=2)  # (N, C)
    da = dgate * gates * (1.0 - gates)

    # gate kernel: a[n, c] = sum_t w[t] * padded_means[n, c + t]
    h = len(params.gate_kernel) // 2
    padded = np.zeros((n, c + 2 * h))
    padded[:, h : h + c] = cache["means"]
    dkernel = np.array(
        [np.sum(da * padded[:, t : t + c]) for t in range(len(params.gate_kernel))]
    )

    dz_flat = dz.reshape(n * c, d)
    dproj = dz_flat.T @ x.reshape(n * c, s2)
    dbias = dz_flat.sum(axis=0)
    return {"proj": dproj, "bias": dbias, "gate_kernel": dkernel}
