"""Tests for spectral community detection.

Independent oracles, defined before any assertions use them:

* ``dense_regularized_laplacian`` — explicit construction of the
  degree-regularized normalization in plain numpy.
* ``np.linalg.eigh`` on that dense matrix — reference spectrum for the
  iterative solver path.
* well-separated Gaussian blobs / planted blocks — clustering ground
  truth with a unique correct answer.
"""

import numpy as np
import pytest

from assocnet.assoc import SymmetricMatrix
from assocnet.community import (
    DENSE_CUTOFF,
    SpectralConfig,
    _leading_eigenpairs,
    detect_communities,
    detect_communities_report,
    kmeans,
    regularized_embedding,
    select_num_communities,
    spectral_on_continuous,
)
from assocnet.errors import InvalidInputError, ParameterError
from assocnet.graphs import Partition, SparseAdjacency
from assocnet.metrics import nmi

# ----------------------------------------------------------------- oracles


def dense_regularized_laplacian(dense_adj, tau):
    """D_tau^{-1/2} A D_tau^{-1/2} built with explicit dense algebra."""
    degrees = dense_adj.sum(axis=1).astype(np.float64)
    reg = degrees + tau
    scale = np.where(reg > 0.0, 1.0 / np.sqrt(np.where(reg > 0.0, reg, 1.0)), 0.0)
    lap = scale[:, None] * dense_adj * scale[None, :]
    return (lap + lap.T) / 2.0


def random_graph(rng, m, p):
    dense = (rng.random((m, m)) < p).astype(np.int8)
    dense = np.triu(dense, k=1)
    return SparseAdjacency.from_dense(dense + dense.T)


def planted_blocks(rng, sizes, p_in, p_out):
    m = int(np.sum(sizes))
    labels = np.repeat(np.arange(1, len(sizes) + 1), sizes)
    u = rng.random((m, m))
    same = labels[:, None] == labels[None, :]
    dense = np.where(same, u < p_in, u < p_out).astype(np.int8)
    dense = np.triu(dense, k=1)
    return SparseAdjacency.from_dense(dense + dense.T), Partition(labels, len(sizes))


def two_cliques(size):
    dense = np.zeros((2 * size, 2 * size), dtype=np.int8)
    dense[:size, :size] = 1
    dense[size:, size:] = 1
    np.fill_diagonal(dense, 0)
    truth = Partition([1] * size + [2] * size, 2)
    return SparseAdjacency.from_dense(dense), truth


def gaussian_blobs(rng, centers, per_blob, spread):
    points, labels = [], []
    for idx, center in enumerate(centers, start=1):
        points.append(center + spread * rng.standard_normal((per_blob, len(center))))
        labels.extend([idx] * per_blob)
    return np.vstack(points), Partition(labels, len(centers))


# ------------------------------------------------------------ eigensolver


class TestLeadingEigenpairs:
    def test_sparse_path_matches_dense_spectrum(self):
        rng = np.random.default_rng(30)
        for _ in range(8):
            m = int(rng.integers(DENSE_CUTOFF + 1, 90))
            adj = random_graph(rng, m, 0.15)
            lap = dense_regularized_laplacian(
                adj.to_dense().astype(np.float64), tau=1.0
            )
            vals_sparse, vecs_sparse = _leading_eigenpairs(lap, 6, method="sparse")
            vals_dense, _ = _leading_eigenpairs(lap, 6, method="dense")
            np.testing.assert_allclose(vals_sparse, vals_dense, atol=1e-6)
            gram = vecs_sparse.T @ vecs_sparse
            np.testing.assert_allclose(gram, np.eye(6), atol=1e-8)

    def test_dense_path_matches_numpy_reference(self):
        rng = np.random.default_rng(31)
        adj = random_graph(rng, 20, 0.3)
        lap = dense_regularized_laplacian(adj.to_dense().astype(np.float64), 0.5)
        vals, _ = _leading_eigenpairs(lap, 5, method="dense")
        reference = np.linalg.eigvalsh(lap)
        top = reference[np.argsort(-np.abs(reference), kind="stable")[:5]]
        np.testing.assert_allclose(vals, top, atol=1e-12)

    def test_sorted_by_absolute_value(self):
        rng = np.random.default_rng(32)
        adj = random_graph(rng, 50, 0.2)
        lap = dense_regularized_laplacian(adj.to_dense().astype(np.float64), 1.0)
        vals, _ = _leading_eigenpairs(lap, 8)
        mags = np.abs(vals)
        assert np.all(np.diff(mags) <= 1e-12)

    def test_rejects_bad_k(self):
        lap = np.eye(4)
        with pytest.raises(ParameterError):
            _leading_eigenpairs(lap, 0)
        with pytest.raises(ParameterError):
            _leading_eigenpairs(lap, 5)
        with pytest.raises(ParameterError):
            _leading_eigenpairs(lap, 2, method="banana")


# -------------------------------------------------------------- embedding


class TestRegularizedEmbedding:
    def test_columns_orthonormal_without_row_normalization(self):
        rng = np.random.default_rng(33)
        adj = random_graph(rng, 60, 0.15)
        config = SpectralConfig(K=4, row_normalize=False)
        vecs = regularized_embedding(adj, config)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(4), atol=1e-8)

    def test_rows_unit_norm_with_row_normalization(self):
        rng = np.random.default_rng(34)
        adj = random_graph(rng, 60, 0.2)
        vecs = regularized_embedding(adj, SpectralConfig(K=3))
        norms = np.linalg.norm(vecs, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-10)

    def test_zero_degree_row_stays_zero(self):
        dense = np.zeros((40, 40), dtype=np.int8)
        dense[:39, :39] = 1
        np.fill_diagonal(dense, 0)
        adj = SparseAdjacency.from_dense(dense)
        vecs = regularized_embedding(adj, SpectralConfig(K=2, tau=0.0))
        assert np.all(vecs[39] == 0.0)
        assert np.all(np.isfinite(vecs))

    def test_needs_enough_nodes(self):
        with pytest.raises(InvalidInputError):
            regularized_embedding(SparseAdjacency(3), SpectralConfig(K=4))


# ----------------------------------------------------------------- kmeans


class TestKmeans:
    def test_separated_blobs_recovered_exactly(self):
        rng = np.random.default_rng(35)
        points, truth = gaussian_blobs(
            rng, [(0.0, 0.0), (100.0, 0.0), (0.0, 100.0)], 40, 0.5
        )
        part = kmeans(points, 3, seed=0)
        assert nmi(part, truth) == 1.0

    def test_labels_cover_one_to_k(self):
        rng = np.random.default_rng(36)
        points = rng.standard_normal((50, 2))
        part = kmeans(points, 4, seed=1)
        assert part.K == 4
        assert part.labels.min() >= 1
        assert part.labels.max() <= 4

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(37)
        points = rng.standard_normal((80, 3))
        first = kmeans(points, 5, seed=9)
        second = kmeans(points, 5, seed=9)
        np.testing.assert_array_equal(first.labels, second.labels)

    def test_single_cluster(self):
        rng = np.random.default_rng(38)
        part = kmeans(rng.standard_normal((12, 2)), 1)
        assert np.all(part.labels == 1)

    def test_k_equals_point_count(self):
        points = np.arange(6, dtype=np.float64)[:, None] * 10.0
        part = kmeans(points, 6, seed=0)
        assert sorted(part.labels.tolist()) == [1, 2, 3, 4, 5, 6]

    def test_coincident_points_do_not_crash(self):
        points = np.ones((10, 2))
        part = kmeans(points, 3, seed=0)
        assert part.m == 10
        occupied = np.flatnonzero(part.sizes()[1:]) + 1
        assert occupied.size == 1

    def test_rejects_bad_parameters(self):
        points = np.zeros((3, 2))
        with pytest.raises(InvalidInputError):
            kmeans(points, 4)
        with pytest.raises(ParameterError):
            kmeans(points, 2, restarts=0)
        with pytest.raises(InvalidInputError):
            kmeans(np.zeros(3), 1)


# -------------------------------------------------------- model selection


class TestSelectNumCommunities:
    def test_override_wins(self):
        rng = np.random.default_rng(39)
        adj = random_graph(rng, 50, 0.2)
        assert select_num_communities(adj, override=15) == 15

    def test_override_validated(self):
        adj = SparseAdjacency(10)
        with pytest.raises(ParameterError):
            select_num_communities(adj, override=0)
        with pytest.raises(ParameterError):
            select_num_communities(adj, override=11)

    def test_two_cliques_give_two(self):
        adj, _ = two_cliques(20)
        assert select_num_communities(adj) == 2

    def test_planted_four_blocks_give_four(self):
        rng = np.random.default_rng(42)
        adj, _ = planted_blocks(rng, [30] * 4, 0.5, 0.02)
        assert select_num_communities(adj) == 4

    def test_tiny_graphs_capped(self):
        assert select_num_communities(SparseAdjacency(1)) == 1
        assert select_num_communities(SparseAdjacency(3)) == 2


# --------------------------------------------------------------- detection


class TestDetectCommunities:
    def test_two_cliques_exact(self):
        adj, truth = two_cliques(10)
        part = detect_communities(adj, SpectralConfig(K=2, seed=0))
        assert nmi(part, truth) == 1.0

    def test_planted_blocks_exact(self):
        rng = np.random.default_rng(43)
        adj, truth = planted_blocks(rng, [30] * 4, 0.5, 0.02)
        part = detect_communities(adj, SpectralConfig(K=4, seed=0))
        assert nmi(part, truth) == 1.0

    def test_deterministic(self):
        rng = np.random.default_rng(44)
        adj = random_graph(rng, 70, 0.1)
        config = SpectralConfig(K=3, seed=5)
        first = detect_communities(adj, config)
        second = detect_communities(adj, config)
        np.testing.assert_array_equal(first.labels, second.labels)

    def test_node_permutation_equivariance(self):
        adj, _ = two_cliques(20)
        rng = np.random.default_rng(45)
        perm = rng.permutation(40)
        dense = adj.to_dense()[np.ix_(perm, perm)]
        part_perm = detect_communities(
            SparseAdjacency.from_dense(dense), SpectralConfig(K=2, seed=0)
        )
        part_orig = detect_communities(adj, SpectralConfig(K=2, seed=0))
        relabeled = Partition(part_orig.labels[perm], 2)
        assert nmi(part_perm, relabeled) == 1.0

    def test_isolated_node_joins_largest_cluster(self):
        dense = np.zeros((13, 13), dtype=np.int8)
        dense[:7, :7] = 1
        dense[7:12, 7:12] = 1
        np.fill_diagonal(dense, 0)
        adj = SparseAdjacency.from_dense(dense)
        part, report = detect_communities_report(adj, SpectralConfig(K=2, seed=0))
        assert report["zero_degree_nodes"] == 1
        big_label = part.labels[0]
        assert part.labels[12] == big_label

    def test_empty_graph_collapses_to_one_community(self):
        part, report = detect_communities_report(
            SparseAdjacency(9), SpectralConfig(K=3, seed=0)
        )
        assert np.all(part.labels == 1)
        assert report["empty_clusters"] == 2
        assert report["eigenvalues"] == []

    def test_report_structure(self):
        adj, _ = two_cliques(25)
        config = SpectralConfig(K=2, restarts=4, seed=2)
        _, report = detect_communities_report(adj, config)
        assert report["K"] == 2
        assert len(report["eigenvalues"]) == 2
        assert len(report["restart_wcss"]) == 4
        assert report["wcss"] == min(report["restart_wcss"])
        assert report["tau"] == pytest.approx(24.0)  # mean degree of 25-cliques
        assert report["zero_degree_nodes"] == 0

    def test_explicit_tau_zero_with_isolated_node(self):
        dense = np.zeros((36, 36), dtype=np.int8)
        dense[:35, :35] = 1
        np.fill_diagonal(dense, 0)
        adj = SparseAdjacency.from_dense(dense)
        part = detect_communities(adj, SpectralConfig(K=2, tau=0.0, seed=0))
        assert part.m == 36

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            SpectralConfig(K=0)
        with pytest.raises(ParameterError):
            SpectralConfig(K=2, restarts=0)
        with pytest.raises(ParameterError):
            SpectralConfig(K=2, tau=-1.0)
        with pytest.raises(ParameterError):
            SpectralConfig(K=2, tau="banana")

    def test_more_communities_than_nodes_rejected(self):
        adj, _ = two_cliques(3)
        with pytest.raises(InvalidInputError):
            detect_communities(adj, SpectralConfig(K=7))


# ------------------------------------------------------ continuous baseline


class TestSpectralOnContinuous:
    def test_block_correlation_recovered(self):
        m = 60
        values = np.full((m, m), 0.05)
        values[:30, :30] = 0.6
        values[30:, 30:] = 0.6
        np.fill_diagonal(values, 1.0)
        corr = SymmetricMatrix(values, "correlation")
        truth = Partition([1] * 30 + [2] * 30, 2)
        part = spectral_on_continuous(corr, SpectralConfig(K=2, seed=0))
        assert nmi(part, truth) == 1.0

    def test_negative_correlations_count_by_magnitude(self):
        m = 40
        values = np.full((m, m), 0.02)
        values[:20, :20] = -0.7
        values[20:, 20:] = -0.7
        np.fill_diagonal(values, 1.0)
        corr = SymmetricMatrix(values, "correlation")
        truth = Partition([1] * 20 + [2] * 20, 2)
        part = spectral_on_continuous(corr, SpectralConfig(K=2, seed=0))
        assert nmi(part, truth) == 1.0

    def test_requires_correlation_kind(self):
        cov = SymmetricMatrix(np.eye(5), "covariance")
        with pytest.raises(InvalidInputError):
            spectral_on_continuous(cov, SpectralConfig(K=2))

    def test_all_zero_matrix_single_community(self):
        values = np.eye(6)
        corr = SymmetricMatrix(values, "correlation")
        part = spectral_on_continuous(corr, SpectralConfig(K=3, seed=0))
        assert np.all(part.labels == 1)
