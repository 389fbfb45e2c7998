"""Retrieval correctness vs brute-force oracles; quick search; profiles."""

import math
import warnings

import numpy as np
import pytest

from plexquery.community import OUTLIER, CommunityPartition
from plexquery.encoder import init_params
from plexquery.errors import (
    CapabilityMissing,
    EmptySet,
    NoUsableFeatures,
    OutlierQuery,
    UnknownCell,
    UnknownCommunity,
)
from plexquery.graph import GraphConfig
from plexquery.ingest import PanelDefinition, extract_patches
from plexquery.query import (
    PanelIndex,
    SearchIndex,
    build_index,
    community_retrieve,
    expression_profile,
    fused_retrieve,
    quick_search,
    representative_patches,
    topn_cosine,
)
from plexquery.trainer import TrainConfig, generate_pseudo_labels


def manual_index(
    reduced: np.ndarray,
    labels: np.ndarray | None = None,
    intensities: np.ndarray | None = None,
    markers: list[str] | None = None,
) -> SearchIndex:
    n = reduced.shape[0]
    if labels is None:
        labels = np.zeros(n, dtype=np.int64)
    k = int(labels[labels != OUTLIER].max()) + 1 if np.any(labels != OUTLIER) else 0
    partition = CommunityPartition(
        node_ids=np.arange(n), labels=np.asarray(labels), n_communities=k, code_length=1.0
    )
    markers = markers or ["a", "b", "c"]
    if intensities is None:
        rng = np.random.default_rng(0)
        intensities = rng.uniform(0.1, 0.9, size=(n, len(markers)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        panel = PanelDefinition(name="p", markers=markers[: min(3, len(markers))])
    pidx = PanelIndex(panel=panel, patch_size=25, partition=partition, reduced=reduced)
    return SearchIndex(
        markers=markers,
        cell_ids=np.arange(n),
        coords=np.zeros((n, 2)),
        intensities=np.asarray(intensities, float),
        intensity_patch_size=25,
        panels={"p": pidx},
    )


@pytest.fixture(scope="module")
def planted_index(four_band_data):
    """Two panels over the 4-band synthetic, untrained encoders."""
    spec, (img, cells, labels, types) = four_band_data
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        panel_a = PanelDefinition(name="alpha", markers=["m0", "m1", "m2"])
        panel_b = PanelDefinition(name="beta", markers=["m2", "m3", "m4"])
        panel_full = PanelDefinition(name="full", markers=spec.markers)
    cfg = TrainConfig(graph=GraphConfig(k=8, sigma=100.0), min_size=5, seed=3)
    artifacts = []
    full_ps = extract_patches(img, cells, panel_full, 25)
    for panel in (panel_a, panel_b):
        ps = extract_patches(img, cells, panel, 25)
        params = init_params(len(panel.markers), 25, feature_dim=16, seed=7)
        emb, graph, part = generate_pseudo_labels(params, ps, ps.coords, cfg)
        artifacts.append(
            {
                "panel": panel,
                "patch_size": 25,
                "features": emb.features,
                "partition": part,
                "graph": graph,
            }
        )
    index = build_index(
        markers=spec.markers,
        cell_ids=full_ps.cell_ids,
        coords=full_ps.coords,
        intensities=full_ps.channel_means,
        intensity_patch_size=25,
        panel_artifacts=artifacts,
        seed=3,
        min_size=5,
    )
    return index


class TestTopN:
    def test_planted_duplicate_ranks_first(self):
        rng = np.random.default_rng(1)
        reduced = rng.normal(size=(20, 6))
        reduced[13] = reduced[4]  # exact duplicate of the query
        idx = manual_index(reduced)
        res = topn_cosine(idx, "p", 4, n=3)
        assert res.cell_ids[0] == 13
        assert res.scores[0] == pytest.approx(1.0, abs=1e-9)

    def test_n_at_least_corpus_returns_everyone_else(self):
        idx = manual_index(np.random.default_rng(2).normal(size=(9, 4)))
        res = topn_cosine(idx, "p", 0, n=50)
        assert sorted(res.cell_ids) == list(range(1, 9))

    def test_matches_full_sort_bruteforce(self, planted_index):
        rng = np.random.default_rng(3)
        idx = planted_index
        pidx = idx.panels["alpha"]
        queries = rng.choice(idx.cell_ids, size=25, replace=False)
        for q in queries:
            res = topn_cosine(idx, "alpha", int(q), n=10)
            # independent oracle: explicit loop, full sort with (score, id) key
            qpos = idx.pos_of(int(q))
            qvec = pidx.reduced[qpos]
            scored = []
            for p in range(idx.n_cells):
                if p == qpos:
                    continue
                row = pidx.reduced[p]
                cos = float(
                    row @ qvec / (np.linalg.norm(row) * np.linalg.norm(qvec))
                )
                scored.append((-cos, int(idx.cell_ids[p])))
            scored.sort()
            expected = [cid for _, cid in scored[:10]]
            assert res.cell_ids == expected

    def test_scores_non_increasing(self, planted_index):
        res = topn_cosine(planted_index, "alpha", 17, n=30)
        assert all(a >= b - 1e-12 for a, b in zip(res.scores, res.scores[1:]))

    def test_unknown_cell(self, planted_index):
        with pytest.raises(UnknownCell):
            topn_cosine(planted_index, "alpha", 10**9, n=5)

    def test_missing_embeddings_capability(self):
        idx = manual_index(np.random.default_rng(0).normal(size=(5, 3)))
        idx.panels["p"].reduced = None
        with pytest.raises(CapabilityMissing):
            topn_cosine(idx, "p", 0, n=2)

    def test_bad_n(self, planted_index):
        with pytest.raises(ValueError):
            topn_cosine(planted_index, "alpha", 17, n=0)


class TestCommunity:
    def test_two_cell_community_returns_both(self):
        reduced = np.random.default_rng(4).normal(size=(5, 3))
        idx = manual_index(reduced, labels=np.array([0, 0, 1, 1, 1]))
        res = community_retrieve(idx, "p", 0)
        assert sorted(res.cell_ids) == [0, 1]

    def test_outlier_query_raises(self):
        reduced = np.random.default_rng(5).normal(size=(4, 3))
        idx = manual_index(reduced, labels=np.array([0, 0, 0, OUTLIER]))
        with pytest.raises(OutlierQuery):
            community_retrieve(idx, "p", 3)

    def test_members_equal_label_set(self, planted_index):
        idx = planted_index
        part = idx.panels["alpha"].partition
        for q in idx.cell_ids[:40]:
            label = int(part.labels[idx.pos_of(int(q))])
            if label == OUTLIER:
                continue
            res = community_retrieve(idx, "alpha", int(q))
            expected = set(int(c) for c in part.members(label))
            assert set(res.cell_ids) == expected
            assert int(q) in res.cell_ids

    def test_retrievals_equal_or_disjoint(self, planted_index):
        idx = planted_index
        part = idx.panels["alpha"].partition
        results = {}
        for q in idx.cell_ids[:30]:
            if int(part.labels[idx.pos_of(int(q))]) == OUTLIER:
                continue
            results[int(q)] = frozenset(community_retrieve(idx, "alpha", int(q)).cell_ids)
        pairs = list(results.values())
        for i in range(len(pairs)):
            for j in range(i + 1, len(pairs)):
                assert pairs[i] == pairs[j] or not (pairs[i] & pairs[j])

    def test_ordering_by_centroid_cosine(self):
        intens = np.array(
            [[1.0, 0.0], [0.9, 0.1], [0.1, 0.9], [0.5, 0.5]], dtype=float
        )
        idx = manual_index(
            np.random.default_rng(0).normal(size=(4, 3)),
            labels=np.zeros(4, dtype=np.int64),
            intensities=intens,
            markers=["a", "b"],
        )
        res = community_retrieve(idx, "p", 0)
        centroid = intens.mean(axis=0)
        sims = [
            float(v @ centroid / (np.linalg.norm(v) * np.linalg.norm(centroid)))
            for v in intens
        ]
        expected = [c for c, _ in sorted(enumerate(sims), key=lambda t: (-t[1], t[0]))]
        assert res.cell_ids == expected


class TestFused:
    def test_single_panel_rejected(self, planted_index):
        with pytest.raises(ValueError):
            fused_retrieve(planted_index, ["alpha"], 17)

    def test_identical_graphs_idempotent(self, planted_index):
        idx = planted_index
        # clone alpha under a second name: intersection of identical graphs
        a = idx.panels["alpha"]
        idx2 = SearchIndex(
            markers=idx.markers,
            cell_ids=idx.cell_ids,
            coords=idx.coords,
            intensities=idx.intensities,
            intensity_patch_size=idx.intensity_patch_size,
            panels={"alpha": a, "alpha2": a},
            seed=idx.seed,
            min_size=idx.min_size,
        )
        part_single = a.partition
        part_fused = idx2.fused_partition(["alpha", "alpha2"])
        assert np.array_equal(part_fused.labels, part_single.labels) or (
            part_fused.code_length == pytest.approx(part_single.code_length, rel=1e-9)
        )

    def test_fused_edges_subset_of_inputs(self, planted_index):
        idx = planted_index
        from plexquery.graph import fuse_graphs

        ga = idx.panels["alpha"].graph
        gb = idx.panels["beta"].graph
        fused = fuse_graphs([ga, gb])
        ea, eb = set(ga.edge_dict()), set(gb.edge_dict())
        for key in fused.edge_dict():
            assert key in ea and key in eb

    def test_fused_partition_cached(self, planted_index):
        idx = planted_index
        p1 = idx.fused_partition(["alpha", "beta"])
        p2 = idx.fused_partition(["beta", "alpha"])  # canonical key: sorted names
        assert p1 is p2

    def test_fused_retrieve_runs(self, planted_index):
        idx = planted_index
        part = idx.fused_partition(["alpha", "beta"])
        clustered = np.flatnonzero(part.labels != OUTLIER)
        q = int(idx.cell_ids[clustered[0]])
        res = fused_retrieve(idx, ["alpha", "beta"], q)
        assert res.mode == "fused"
        assert q in res.cell_ids
        expected = set(int(c) for c in part.members(int(part.labels[clustered[0]])))
        assert set(res.cell_ids) == expected


class TestQuickSearch:
    def hand_index(self):
        # 10 cells, one informative feature with known ordering
        values = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0])
        intens = np.stack([values, np.full(10, 0.5)], axis=1)
        return manual_index(
            np.random.default_rng(0).normal(size=(10, 3)),
            intensities=intens,
            markers=["sig", "flat"],
        )

    def test_single_feature_max_query_nearest_value_first(self):
        idx = self.hand_index()
        res, _ = quick_search(idx, 9, ["sig"], n=3)
        # hand oracle: z-scores keep order; nearest values to 9 are 8, 7, 6
        assert res.cell_ids == [8, 7, 6]

    def test_zero_variance_feature_dropped_with_warning(self):
        idx = self.hand_index()
        with pytest.warns(UserWarning, match="zero variance"):
            res, _ = quick_search(idx, 9, ["sig", "flat"], n=2)
        assert res.panels == ["sig"]

    def test_all_zero_variance_raises(self):
        idx = self.hand_index()
        with pytest.raises(NoUsableFeatures):
            with pytest.warns(UserWarning):
                quick_search(idx, 9, ["flat"], n=2)

    def test_similarity_matrix_symmetric_unit_diagonal(self, planted_index):
        res, matrix = quick_search(planted_index, 17, ["m0", "m1", "m2"], n=8)
        assert matrix.shape == (8, 8)
        assert np.allclose(matrix, matrix.T, atol=1e-12)
        assert np.allclose(np.diag(matrix), 1.0, atol=1e-9)

    def test_query_excluded(self, planted_index):
        res, _ = quick_search(planted_index, 17, ["m0", "m1"], n=20)
        assert 17 not in res.cell_ids


class TestExpressionProfile:
    def test_singleton_zero_std(self, planted_index):
        idx = planted_index
        profile = expression_profile(idx, [17])
        pos = idx.pos_of(17)
        for i, marker in enumerate(idx.markers):
            mean, std = profile[marker]
            assert mean == pytest.approx(float(idx.intensities[pos, i]))
            assert std == 0.0

    def test_two_cell_mean(self):
        intens = np.array([[0.2, 0.0], [0.4, 1.0]])
        idx = manual_index(
            np.random.default_rng(0).normal(size=(2, 3)),
            intensities=intens,
            markers=["a", "b"],
        )
        profile = expression_profile(idx, [0, 1])
        assert profile["a"][0] == pytest.approx(0.3)

    def test_matches_bruteforce_on_20_cells(self, planted_index):
        idx = planted_index
        rng = np.random.default_rng(6)
        cells = [int(c) for c in rng.choice(idx.cell_ids, size=20, replace=False)]
        profile = expression_profile(idx, cells)
        for i, marker in enumerate(idx.markers):
            values = [float(idx.intensities[idx.pos_of(c), i]) for c in cells]
            mean = sum(values) / len(values)
            var = sum((v - mean) ** 2 for v in values) / len(values)
            assert profile[marker][0] == pytest.approx(mean, rel=1e-12)
            assert profile[marker][1] == pytest.approx(math.sqrt(var), rel=1e-9)

    def test_empty_set(self, planted_index):
        with pytest.raises(EmptySet):
            expression_profile(planted_index, [])


class TestRepresentatives:
    def test_count_capped_at_community_size(self):
        idx = manual_index(
            np.random.default_rng(0).normal(size=(6, 3)),
            labels=np.array([0, 0, 0, 1, 1, 1]),
        )
        reps = representative_patches(idx, "p", 0, count=50)
        assert sorted(reps) == [0, 1, 2]

    def test_single_member_community(self):
        idx = manual_index(
            np.random.default_rng(1).normal(size=(4, 3)),
            labels=np.array([0, 1, 1, 1]),
        )
        assert representative_patches(idx, "p", 0, count=3) == [0]

    def test_matches_centroid_ranking(self, planted_index):
        idx = planted_index
        part = idx.panels["alpha"].partition
        reps = representative_patches(idx, "alpha", 0, count=5)
        member_pos = np.flatnonzero(part.labels == 0)
        rows = idx.intensities[member_pos]
        centroid = rows.mean(axis=0)
        sims = rows @ centroid / (
            np.linalg.norm(rows, axis=1) * np.linalg.norm(centroid)
        )
        ranked = sorted(
            zip(sims, idx.cell_ids[member_pos]), key=lambda t: (-t[0], t[1])
        )
        assert reps == [int(c) for _, c in ranked[:5]]

    def test_unknown_community(self, planted_index):
        with pytest.raises(UnknownCommunity):
            representative_patches(planted_index, "alpha", 10**6, count=3)
