"""Community detection by regularized spectral embedding plus k-means.

The adjacency (or a dense nonnegative weight matrix) is normalized as
L = D_tau^{-1/2} A D_tau^{-1/2} with D_tau = D + tau*I. The leading
eigenvectors by absolute eigenvalue form the embedding; optional row
normalization makes the fit degree-corrected. Lloyd's algorithm with
k-means++ seeding clusters the embedded nodes, deterministically for a
given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .assoc import SymmetricMatrix
from .errors import ConvergenceError, InvalidInputError, ParameterError
from .graphs import Partition, SparseAdjacency

DENSE_CUTOFF = 32


@dataclass(frozen=True)
class SpectralConfig:
    """Settings for spectral community detection.

    tau is the Laplacian regularizer; "auto" uses the mean degree.
    row_normalize rescales embedding rows to unit norm (degree
    correction). restarts counts independent k-means initializations.
    """

    K: int
    tau: float | str = "auto"
    restarts: int = 10
    seed: int = 0
    row_normalize: bool = True

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ParameterError("K must be at least 1")
        if self.restarts < 1:
            raise ParameterError("restarts must be at least 1")
        if isinstance(self.tau, str):
            if self.tau != "auto":
                raise ParameterError('tau must be "auto" or a nonnegative number')
        elif self.tau < 0:
            raise ParameterError("tau must be nonnegative")


def _regularized_laplacian(weights, degrees, tau):
    """Symmetrically scale a weight matrix by 1/sqrt(degree + tau).

    Returns (L, tau_value). Rows whose regularized degree is zero are
    scaled by zero rather than dividing by it.
    """
    tau_value = float(np.mean(degrees)) if tau == "auto" else float(tau)
    reg = degrees + tau_value
    with np.errstate(divide="ignore"):
        scale = np.where(reg > 0.0, 1.0 / np.sqrt(np.maximum(reg, 1e-300)), 0.0)
    if sp.issparse(weights):
        diag = sp.diags(scale)
        lap = diag @ weights @ diag
        lap = (lap + lap.T) * 0.5
        return lap.tocsr(), tau_value
    lap = scale[:, None] * weights * scale[None, :]
    return (lap + lap.T) * 0.5, tau_value


def _leading_eigenpairs(lap, k: int, method: str = "auto"):
    """Top-k eigenpairs of a symmetric matrix by absolute eigenvalue.

    method "auto" picks a dense decomposition for small or near-full
    problems and a Lanczos-style iterative solver otherwise; "dense" or
    "sparse" forces the path. Eigenpairs come back sorted by decreasing
    |eigenvalue| with a stable order on ties.
    """
    m = lap.shape[0]
    if not 1 <= k <= m:
        raise ParameterError("need 1 <= k <= m eigenpairs")
    nnz = lap.nnz if sp.issparse(lap) else int(np.count_nonzero(lap))
    if method == "auto":
        use_dense = m <= DENSE_CUTOFF or k >= m - 1 or nnz == 0
    elif method in ("dense", "sparse"):
        use_dense = method == "dense"
    else:
        raise ParameterError('method must be "auto", "dense", or "sparse"')

    if use_dense:
        dense = lap.toarray() if sp.issparse(lap) else np.asarray(lap, dtype=np.float64)
        vals, vecs = np.linalg.eigh(dense)
    else:
        v0 = np.full(m, 1.0 / np.sqrt(m))
        try:
            vals, vecs = eigsh(lap, k=k, which="LM", tol=1e-8, v0=v0)
        except ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"eigensolver converged {len(exc.eigenvalues)} of {k} "
                f"requested eigenpairs"
            ) from exc
    order = np.argsort(-np.abs(vals), kind="stable")[:k]
    return vals[order], vecs[:, order]


def _embed(weights, degrees, config: SpectralConfig, k: int):
    """Eigenvector embedding of the regularized Laplacian.

    Returns (embedding, eigenvalues, tau_value); the embedding is row
    normalized when the config asks for it, leaving zero rows at zero.
    """
    lap, tau_value = _regularized_laplacian(weights, degrees, config.tau)
    vals, vecs = _leading_eigenpairs(lap, k)
    if config.row_normalize:
        norms = np.sqrt(np.square(vecs).sum(axis=1))
        nonzero = norms > 0.0
        vecs = vecs.copy()
        vecs[nonzero] /= norms[nonzero, None]
    return vecs, vals, tau_value


def regularized_embedding(adj: SparseAdjacency, config: SpectralConfig) -> np.ndarray:
    """Spectral embedding of an adjacency into config.K dimensions."""
    if adj.m < config.K:
        raise InvalidInputError("need at least K nodes")
    degrees = adj.degrees().astype(np.float64)
    vecs, _, _ = _embed(adj.to_csr(), degrees, config, config.K)
    return vecs


def _kmeans_plusplus(points, k, rng):
    """k-means++ seeding; duplicates the first pick when points coincide."""
    m = points.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(m)
    d2 = np.square(points - points[chosen[0]]).sum(axis=1)
    for idx in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            chosen[idx] = chosen[0]
        else:
            chosen[idx] = rng.choice(m, p=d2 / total)
        d2 = np.minimum(d2, np.square(points - points[chosen[idx]]).sum(axis=1))
    return points[chosen].copy()


def _lloyd(points, k, rng, max_iter=300):
    """One seeded k-means run; returns (labels, wcss, iterations).

    Ties in the assignment step go to the lowest-index centroid. An
    empty cluster is re-seeded at the point farthest from its assigned
    centroid; when every distance is zero it is left empty.
    """
    m = points.shape[0]
    centroids = _kmeans_plusplus(points, k, rng)
    labels = None
    sq_points = np.square(points).sum(axis=1)
    for iteration in range(max_iter):
        d2 = (
            sq_points[:, None]
            - 2.0 * points @ centroids.T
            + np.square(centroids).sum(axis=1)[None, :]
        )
        np.maximum(d2, 0.0, out=d2)
        new_labels = d2.argmin(axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels

        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, points)
        counts = np.bincount(labels, minlength=k)
        occupied = counts > 0
        centroids = np.where(
            occupied[:, None], sums / np.maximum(counts, 1)[:, None], centroids
        )
        if not occupied.all():
            assigned_d2 = d2[np.arange(m), labels]
            farthest = np.argsort(-assigned_d2, kind="stable")
            cursor = 0
            for cluster in np.flatnonzero(~occupied):
                if cursor < m and assigned_d2[farthest[cursor]] > 0.0:
                    centroids[cluster] = points[farthest[cursor]]
                    cursor += 1
    wcss = float(d2[np.arange(m), labels].sum())
    return labels, wcss, iteration + 1


def _kmeans_runs(points, k, restarts, seed):
    """Best-of-restarts k-means; returns (labels, best_wcss, all_wcss)."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise InvalidInputError("points must be a 2-D array")
    m = points.shape[0]
    if m < k:
        raise InvalidInputError("need at least K points")
    if k < 1:
        raise ParameterError("K must be at least 1")
    streams = np.random.SeedSequence(seed).spawn(restarts)
    best_labels, best_wcss, all_wcss = None, np.inf, []
    for stream in streams:
        labels, wcss, _ = _lloyd(points, k, np.random.default_rng(stream))
        all_wcss.append(wcss)
        if wcss < best_wcss:
            best_labels, best_wcss = labels, wcss
    return best_labels, best_wcss, all_wcss


def kmeans(points: np.ndarray, K: int, restarts: int = 10, seed: int = 0) -> Partition:
    """Cluster rows of a point matrix into K groups, labels in 1..K.

    Runs Lloyd's algorithm from `restarts` independent k-means++ seeds
    and keeps the run with the smallest within-cluster sum of squares.
    Unoccupied labels may remain when points coincide; they are visible
    in the returned Partition's sizes rather than compacted away.
    """
    if restarts < 1:
        raise ParameterError("restarts must be at least 1")
    labels, _, _ = _kmeans_runs(points, K, restarts, seed)
    return Partition(labels + 1, K)


def select_num_communities(adj: SparseAdjacency, override: int | None = None) -> int:
    """Pick a community count: the override when given, else the eigengap.

    The eigengap rule maximizes |lambda_k| - |lambda_{k+1}| of the
    regularized Laplacian spectrum over k in [2, K_max] with
    K_max = min(m // 10, 150), clamped to keep k + 1 eigenpairs
    available.
    """
    m = adj.m
    if override is not None:
        if not 1 <= override <= m:
            raise ParameterError("community count must lie in [1, m]")
        return int(override)
    if m < 4:
        return min(2, m)
    k_max = max(2, min(m // 10, 150))
    k_max = min(k_max, m - 2)
    degrees = adj.degrees().astype(np.float64)
    lap, _ = _regularized_laplacian(adj.to_csr(), degrees, "auto")
    vals, _ = _leading_eigenpairs(lap, k_max + 1)
    magnitudes = np.abs(vals)
    gaps = magnitudes[1 : k_max] - magnitudes[2 : k_max + 1]
    return int(gaps.argmax()) + 2


def _detect_on_weights(weights, degrees, config: SpectralConfig):
    """Shared embed + cluster + zero-degree cleanup; returns (Partition, report)."""
    m = len(degrees)
    if m < config.K:
        raise InvalidInputError("need at least K nodes")
    vecs, vals, tau_value = _embed(weights, degrees, config, config.K)
    labels0, best_wcss, all_wcss = _kmeans_runs(
        vecs, config.K, config.restarts, config.seed
    )
    labels = labels0 + 1

    dangling = degrees == 0.0
    if dangling.any():
        sizes = np.bincount(labels[~dangling], minlength=config.K + 1)
        labels[dangling] = int(sizes[1:].argmax()) + 1

    partition = Partition(labels, config.K)
    report = {
        "K": config.K,
        "tau": tau_value,
        "eigenvalues": [float(v) for v in vals],
        "wcss": best_wcss,
        "restart_wcss": all_wcss,
        "zero_degree_nodes": int(dangling.sum()),
        "empty_clusters": int((partition.sizes()[1:] == 0).sum()),
        "row_normalize": config.row_normalize,
        "seed": config.seed,
    }
    return partition, report


def detect_communities_report(adj: SparseAdjacency, config: SpectralConfig):
    """detect_communities plus a run report (eigenvalues, WCSS, restarts).

    Zero-degree nodes carry no spectral information; they are assigned
    to the largest cluster and counted in the report.
    """
    if adj.edge_count == 0:
        partition = Partition(np.ones(adj.m, dtype=np.int64), config.K)
        report = {
            "K": config.K,
            "tau": 0.0 if config.tau == "auto" else float(config.tau),
            "eigenvalues": [],
            "wcss": 0.0,
            "restart_wcss": [],
            "zero_degree_nodes": adj.m,
            "empty_clusters": config.K - 1,
            "row_normalize": config.row_normalize,
            "seed": config.seed,
        }
        return partition, report
    degrees = adj.degrees().astype(np.float64)
    return _detect_on_weights(adj.to_csr(), degrees, config)


def detect_communities(adj: SparseAdjacency, config: SpectralConfig) -> Partition:
    """Partition a graph into config.K communities."""
    partition, _ = detect_communities_report(adj, config)
    return partition


def spectral_on_continuous(corr: SymmetricMatrix, config: SpectralConfig) -> Partition:
    """Cluster directly on |r| without thresholding (comparison baseline).

    Uses the same regularized embedding and k-means, but on the dense
    nonnegative matrix of absolute correlations with a zero diagonal.
    """
    if corr.kind != "correlation":
        raise InvalidInputError("expected a correlation matrix")
    weights = np.abs(np.asarray(corr.values, dtype=np.float64))
    np.fill_diagonal(weights, 0.0)
    degrees = weights.sum(axis=1)
    if not degrees.any():
        return Partition(np.ones(weights.shape[0], dtype=np.int64), config.K)
    partition, _ = _detect_on_weights(weights, degrees, config)
    return partition
