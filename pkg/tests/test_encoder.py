"""Encoder forward/backward, gate, losses vs independent oracles, memory updates."""

import math

import numpy as np
import pytest

from plexquery.encoder import (
    EmbeddingSet,
    EncoderParams,
    LossConfig,
    MemoryDictionary,
    batch_cluster_nce,
    cluster_nce_loss,
    combined_loss_and_grads,
    combined_step,
    eca_gate,
    forward,
    forward_with_cache,
    init_params,
    momentum_update,
    triplet_from_features,
)
from plexquery.errors import NoValidTriplet, ShapeMismatch, UnlabeledSample
from plexquery.ingest import CellRecord, PanelDefinition, PatchSet


def make_patchset(pixels: np.ndarray, markers=None) -> PatchSet:
    n, c, s, _ = pixels.shape
    markers = markers or [f"m{i}" for i in range(c)]
    with pytest.warns(UserWarning) if c < 5 else _nullcontext():
        panel = PanelDefinition(name="p", markers=markers)
    cells = [CellRecord(cell_id=i, x=50, y=50) for i in range(n)]
    return PatchSet(panel=panel, patch_size=s, cells=cells, pixels=pixels)


class _nullcontext:
    def __enter__(self):
        return self

    def __exit__(self, *a):
        return False


def unit_rows(x):
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def random_memory(rng, k, d) -> MemoryDictionary:
    c = unit_rows(rng.normal(size=(k, d)))
    return MemoryDictionary(centroids=c, sizes=np.ones(k, dtype=np.int64))


class TestForward:
    def test_rows_unit_norm(self):
        rng = np.random.default_rng(0)
        params = init_params(3, 7, feature_dim=5, seed=1)
        pixels = rng.uniform(0, 1, size=(10, 3, 7, 7))
        feats, _ = forward_with_cache(params, pixels)
        assert np.allclose(np.linalg.norm(feats, axis=1), 1.0, atol=1e-9)

    def test_all_zero_patch_finite(self):
        params = init_params(2, 5, feature_dim=4, seed=2)
        feats, _ = forward_with_cache(params, np.zeros((1, 2, 5, 5)))
        assert np.all(np.isfinite(feats))
        assert np.linalg.norm(feats[0]) == pytest.approx(1.0, abs=1e-9)

    def test_identical_patches_identical_embeddings(self):
        rng = np.random.default_rng(3)
        params = init_params(2, 5, feature_dim=4, seed=3)
        patch = rng.uniform(0, 1, size=(1, 2, 5, 5))
        pixels = np.concatenate([patch, patch])
        feats, _ = forward_with_cache(params, pixels)
        assert np.array_equal(feats[0], feats[1])

    def test_channel_permutation_changes_output(self):
        # two channels with distinct content: swapping them must move the embedding
        rng = np.random.default_rng(4)
        params = init_params(2, 5, feature_dim=4, seed=4)
        patch = rng.uniform(0, 1, size=(1, 2, 5, 5))
        swapped = patch[:, ::-1].copy()
        f1, _ = forward_with_cache(params, patch)
        f2, _ = forward_with_cache(params, swapped)
        assert not np.allclose(f1, f2)

    def test_embedding_dim_is_feature_dim_times_channels(self):
        params = init_params(4, 5, feature_dim=6, seed=0)
        assert params.embedding_dim == 24
        feats, _ = forward_with_cache(params, np.zeros((2, 4, 5, 5)))
        assert feats.shape == (2, 24)

    def test_channel_count_mismatch(self):
        params = init_params(3, 5, feature_dim=4, seed=0)
        with pytest.raises(ShapeMismatch):
            forward_with_cache(params, np.zeros((1, 2, 5, 5)))

    def test_forward_wraps_patchset(self):
        rng = np.random.default_rng(5)
        pixels = rng.uniform(0, 1, size=(3, 2, 5, 5))
        ps = make_patchset(pixels)
        params = init_params(2, 5, feature_dim=4, seed=5)
        emb = forward(params, ps)
        assert isinstance(emb, EmbeddingSet)
        assert emb.panel == "p"
        assert emb.features.shape == (3, 8)
        assert np.array_equal(emb.cell_ids, np.arange(3))


class TestEcaGate:
    def test_zero_kernel_gives_half(self):
        params = init_params(4, 5, seed=0)
        params.gate_kernel[:] = 0.0
        gates = eca_gate(params, np.array([0.3, 0.9, 0.1, 0.5]))
        assert np.allclose(gates, 0.5)

    def test_identity_kernel_is_sigmoid_of_mean(self):
        params = init_params(4, 5, gate_kernel_size=3, seed=0)
        params.gate_kernel[:] = [0.0, 1.0, 0.0]
        means = np.array([0.3, -0.9, 0.1, 2.5])
        gates = eca_gate(params, means)
        assert np.allclose(gates, 1 / (1 + np.exp(-means)), atol=1e-12)

    def test_matches_handrolled_convolution(self):
        rng = np.random.default_rng(6)
        c = 6
        params = init_params(c, 5, gate_kernel_size=3, seed=6)
        kernel = rng.normal(size=3)
        params.gate_kernel[:] = kernel
        means = rng.normal(size=c)
        gates = eca_gate(params, means)
        # independent direct convolution with explicit zero padding
        expected = np.empty(c)
        for i in range(c):
            acc = 0.0
            for t in range(3):
                j = i + t - 1
                acc += kernel[t] * (means[j] if 0 <= j < c else 0.0)
            expected[i] = 1 / (1 + math.exp(-acc))
        assert np.allclose(gates, expected, atol=1e-12)

    def test_kernel_longer_than_channels(self):
        params = init_params(2, 5, gate_kernel_size=5, seed=7)
        gates = eca_gate(params, np.array([0.2, 0.4]))
        assert gates.shape == (2,)
        assert np.all((gates > 0) & (gates < 1))


class TestClusterNce:
    def test_symmetric_two_clusters_is_ln2(self):
        # q orthogonal to both centroids: all logits equal
        centroids = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        mem = MemoryDictionary(centroids=centroids, sizes=np.ones(2, dtype=np.int64))
        q = np.array([0.0, 0.0, 1.0])
        loss, _ = cluster_nce_loss(q, 0, mem, tau=0.05)
        assert loss == pytest.approx(math.log(2), abs=1e-9)

    def test_loss_vanishes_as_tau_shrinks(self):
        centroids = np.array([[1.0, 0.0], [0.0, 1.0]])
        mem = MemoryDictionary(centroids=centroids, sizes=np.ones(2, dtype=np.int64))
        q = np.array([1.0, 0.0])  # q = positive centroid, distinct logits
        loss, _ = cluster_nce_loss(q, 0, mem, tau=1e-3)
        assert loss < 1e-9

    def test_nonnegative(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            mem = random_memory(rng, 4, 6)
            q = unit_rows(rng.normal(size=(1, 6)))[0]
            loss, _ = cluster_nce_loss(q, int(rng.integers(4)), mem, tau=0.2)
            assert loss >= 0

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        h = 1e-5
        for trial in range(5):
            d, k = 12, 4
            mem = random_memory(rng, k, d)
            q = unit_rows(rng.normal(size=(1, d)))[0]
            label = int(rng.integers(k))
            tau = float(rng.uniform(0.05, 0.5))
            _, grad = cluster_nce_loss(q, label, mem, tau)
            fd = np.zeros(d)
            for i in range(d):
                qp, qm = q.copy(), q.copy()
                qp[i] += h
                qm[i] -= h
                fd[i] = (
                    cluster_nce_loss(qp, label, mem, tau)[0]
                    - cluster_nce_loss(qm, label, mem, tau)[0]
                ) / (2 * h)
            rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-30)
            assert rel < 1e-6

    def test_logit_shift_invariance(self):
        # adding a constant to every logit must not change the loss
        rng = np.random.default_rng(10)
        d, k = 8, 3
        mem = random_memory(rng, k, d)
        q = unit_rows(rng.normal(size=(1, d)))[0]
        tau = 0.1
        const = 250.0  # would overflow exp without stabilization
        shifted = MemoryDictionary(
            centroids=mem.centroids + tau * const * q[None, :],
            sizes=mem.sizes,
        )
        base, _ = cluster_nce_loss(q, 1, mem, tau)
        moved, _ = cluster_nce_loss(q, 1, shifted, tau)
        assert moved == pytest.approx(base, abs=1e-9)

    def test_outlier_label_rejected(self):
        mem = random_memory(np.random.default_rng(0), 2, 4)
        with pytest.raises(UnlabeledSample):
            cluster_nce_loss(np.ones(4) / 2, -1, mem, tau=0.1)
        with pytest.raises(UnlabeledSample):
            batch_cluster_nce(np.ones((2, 4)) / 2, np.array([0, -1]), mem, 0.1)


def oracle_batch_hard_triplet(feats, labels, margin):
    """Independent exhaustive enumeration over all triplets per anchor."""
    n = len(feats)
    losses = []
    for a in range(n):
        pos_d = [
            math.dist(feats[a], feats[p])
            for p in range(n)
            if p != a and labels[p] == labels[a]
        ]
        neg_d = [math.dist(feats[a], feats[m]) for m in range(n) if labels[m] != labels[a]]
        if not pos_d or not neg_d:
            continue
        losses.append(max(max(pos_d) - min(neg_d) + margin, 0.0))
    return sum(losses) / len(losses)


class TestTriplet:
    def test_equal_distances_loss_is_margin(self):
        # equilateral on the unit circle: d(a,p) = d(a,n) for every anchor
        ang = np.array([0, 2 * np.pi / 3, 4 * np.pi / 3])
        feats = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        labels = np.array([0, 0, 1])
        loss, _ = triplet_from_features(feats, labels, margin=0.3)
        assert loss == pytest.approx(0.3, abs=1e-12)

    def test_hinge_inactive_gives_zero(self):
        feats = np.array(
            [[1.0, 0.0], [0.999, math.sqrt(1 - 0.999**2)], [-1.0, 0.0], [-0.999, -math.sqrt(1 - 0.999**2)]]
        )
        labels = np.array([0, 0, 1, 1])
        loss, grads = triplet_from_features(feats, labels, margin=0.1)
        assert loss == 0.0
        assert np.all(grads == 0.0)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            n = int(rng.integers(4, 12))
            feats = unit_rows(rng.normal(size=(n, 5)))
            labels = rng.integers(0, 2, size=n)
            labels[0], labels[1] = 0, 1  # both labels present
            loss, _ = triplet_from_features(feats, labels, margin=0.3)
            assert loss == pytest.approx(
                oracle_batch_hard_triplet(feats, labels, 0.3), abs=1e-12
            )

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        h = 1e-5
        feats = unit_rows(rng.normal(size=(8, 4)))
        labels = np.array([0, 0, 0, 1, 1, 1, 2, 2])
        _, grad = triplet_from_features(feats, labels, margin=0.3)
        fd = np.zeros_like(feats)
        for i in range(feats.shape[0]):
            for j in range(feats.shape[1]):
                fp, fm = feats.copy(), feats.copy()
                fp[i, j] += h
                fm[i, j] -= h
                fd[i, j] = (
                    triplet_from_features(fp, labels, 0.3)[0]
                    - triplet_from_features(fm, labels, 0.3)[0]
                ) / (2 * h)
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-30)
        assert rel < 1e-6

    def test_no_valid_triplet(self):
        feats = unit_rows(np.random.default_rng(0).normal(size=(4, 3)))
        with pytest.raises(NoValidTriplet):
            triplet_from_features(feats, np.zeros(4, dtype=int), margin=0.3)


class TestCombinedStep:
    def setup_method(self):
        rng = np.random.default_rng(20)
        self.params = init_params(3, 5, feature_dim=6, seed=20)
        self.pixels = rng.uniform(0, 1, size=(8, 3, 5, 5))
        self.ps = make_patchset(self.pixels, markers=["a", "b", "c"])
        self.labels = np.array([0, 0, 1, 1, 0, 1, 0, 1])
        self.memory = random_memory(rng, 2, 18)

    def test_zero_lr_keeps_params(self):
        cfg = LossConfig()
        new, _ = combined_step(self.params, self.ps, self.labels, self.memory, cfg, lr=0.0)
        assert np.array_equal(new.proj, self.params.proj)
        assert np.array_equal(new.bias, self.params.bias)
        assert np.array_equal(new.gate_kernel, self.params.gate_kernel)

    def test_lambda_zero_is_pure_contrastive(self):
        cfg = LossConfig(lam=0.0)
        _, loss = combined_step(self.params, self.ps, self.labels, self.memory, cfg, lr=0.0)
        feats, _ = forward_with_cache(self.params, self.pixels)
        expected, _ = batch_cluster_nce(feats, self.labels, self.memory, cfg.tau)
        assert loss == pytest.approx(expected, abs=1e-12)

    def test_step_reduces_loss(self):
        cfg = LossConfig()
        params = self.params
        _, loss0 = combined_step(params, self.ps, self.labels, self.memory, cfg, lr=0.0)
        for _ in range(10):
            params, _ = combined_step(params, self.ps, self.labels, self.memory, cfg, lr=0.05)
        _, loss1 = combined_step(params, self.ps, self.labels, self.memory, cfg, lr=0.0)
        assert loss1 < loss0

    def test_end_to_end_gradient_vs_finite_differences(self):
        # smaller sibling of acceptance A3
        h = 1e-5
        cfg = LossConfig(tau=0.2, margin=0.3, lam=0.7)
        loss, grads = combined_loss_and_grads(
            self.params, self.pixels, self.labels, self.memory, cfg
        )
        for name in ("proj", "bias", "gate_kernel"):
            arr = getattr(self.params, name)
            fd = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                lp, _ = combined_loss_and_grads(
                    self.params, self.pixels, self.labels, self.memory, cfg
                )
                arr[idx] = orig - h
                lm, _ = combined_loss_and_grads(
                    self.params, self.pixels, self.labels, self.memory, cfg
                )
                arr[idx] = orig
                fd[idx] = (lp - lm) / (2 * h)
            rel = np.linalg.norm(grads[name] - fd) / max(np.linalg.norm(fd), 1e-30)
            assert rel < 1e-4, f"{name}: rel err {rel}"


class TestMomentum:
    def test_mu_zero_is_identity(self):
        rng = np.random.default_rng(30)
        mem = random_memory(rng, 3, 5)
        before = mem.centroids.copy()
        after = momentum_update(mem, unit_rows(rng.normal(size=(6, 5))), rng.integers(0, 3, 6), mu=0.0)
        assert np.array_equal(after.centroids, before)

    def test_mu_one_is_normalized_batch_mean(self):
        rng = np.random.default_rng(31)
        mem = random_memory(rng, 2, 4)
        feats = unit_rows(rng.normal(size=(5, 4)))
        labels = np.array([0, 0, 0, 1, 1])
        after = momentum_update(mem, feats, labels, mu=1.0)
        for k in range(2):
            mean = feats[labels == k].mean(axis=0)
            assert np.allclose(after.centroids[k], mean / np.linalg.norm(mean))

    def test_halfway_blend_renormalized(self):
        mem = MemoryDictionary(
            centroids=np.array([[1.0, 0.0]]), sizes=np.array([1], dtype=np.int64)
        )
        after = momentum_update(mem, np.array([[0.0, 1.0]]), np.array([0]), mu=0.5)
        expected = math.sqrt(2) / 2
        assert np.allclose(after.centroids[0], [expected, expected], atol=1e-12)

    def test_absent_clusters_untouched(self):
        rng = np.random.default_rng(32)
        mem = random_memory(rng, 3, 4)
        before = mem.centroids.copy()
        feats = unit_rows(rng.normal(size=(3, 4)))
        after = momentum_update(mem, feats, np.array([1, 1, 1]), mu=0.5)
        assert np.array_equal(after.centroids[0], before[0])
        assert np.array_equal(after.centroids[2], before[2])
        assert not np.allclose(after.centroids[1], before[1])

    def test_outlier_labels_ignored(self):
        rng = np.random.default_rng(33)
        mem = random_memory(rng, 2, 4)
        before = mem.centroids.copy()
        feats = unit_rows(rng.normal(size=(2, 4)))
        after = momentum_update(mem, feats, np.array([-1, -1]), mu=0.9)
        assert np.array_equal(after.centroids, before)

    def test_centroids_stay_unit_norm(self):
        rng = np.random.default_rng(34)
        mem = random_memory(rng, 3, 6)
        for _ in range(5):
            feats = unit_rows(rng.normal(size=(9, 6)))
            mem = momentum_update(mem, feats, rng.integers(0, 3, 9), mu=0.2)
        assert np.allclose(np.linalg.norm(mem.centroids, axis=1), 1.0, atol=1e-12)
