"""Undirected graph and node-partition containers used across the package.

Adjacency is stored as a canonical edge list: each undirected edge appears
once as a pair (i, j) with i < j, rows sorted lexicographically. Node ids
are 0-based internally; file formats are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError


def _canonical_edges(edges: np.ndarray) -> np.ndarray:
    edges = np.asarray(edges, dtype=np.int64)
    if edges.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise InvalidInputError("edge array must have shape (E, 2)")
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    out = np.column_stack([lo, hi])
    order = np.lexsort((out[:, 1], out[:, 0]))
    return out[order]


@dataclass(frozen=True)
class SparseAdjacency:
    """Sparse symmetric binary adjacency over m nodes with a zero diagonal."""

    m: int
    edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", _canonical_edges(self.edges))
        e = self.edges
        if self.m < 1:
            raise InvalidInputError("adjacency needs at least one node")
        if e.size:
            if e.min() < 0 or e.max() >= self.m:
                raise InvalidInputError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise InvalidInputError("self loops are not allowed")
            if np.any((e[:-1, 0] == e[1:, 0]) & (e[:-1, 1] == e[1:, 1])):
                raise InvalidInputError("duplicate edges are not allowed")

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SparseAdjacency":
        dense = np.asarray(dense)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise InvalidInputError("adjacency matrix must be square")
        if not np.array_equal(dense, dense.T):
            raise InvalidInputError("adjacency matrix must be symmetric")
        if np.any(np.diag(dense) != 0):
            raise InvalidInputError("adjacency diagonal must be zero")
        ii, jj = np.nonzero(np.triu(dense, k=1))
        return cls(dense.shape[0], np.column_stack([ii, jj]))

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.m, dtype=np.int64)
        if self.edges.size:
            np.add.at(deg, self.edges[:, 0], 1)
            np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.m, self.m), dtype=np.int8)
        if self.edges.size:
            out[self.edges[:, 0], self.edges[:, 1]] = 1
            out[self.edges[:, 1], self.edges[:, 0]] = 1
        return out

    def to_csr(self) -> sp.csr_matrix:
        e = self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(rows.shape[0], dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.m, self.m))

    def pair_ids(self) -> np.ndarray:
        """Linear ids i*m + j of the canonical edge pairs, for set algebra."""
        return self.edges[:, 0] * np.int64(self.m) + self.edges[:, 1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseAdjacency):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.edges, other.edges)


@dataclass(frozen=True)
class Partition:
    """Node labels in {0, ..., K}; label 0 marks background nodes."""

    labels: np.ndarray
    K: int

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1 or labels.size == 0:
            raise InvalidInputError("labels must be a non-empty vector")
        if self.K < 1:
            raise InvalidInputError("K must be at least 1")
        if labels.min() < 0 or labels.max() > self.K:
            raise InvalidInputError("labels must lie in {0, ..., K}")

    @property
    def m(self) -> int:
        return int(self.labels.shape[0])

    def sizes(self) -> np.ndarray:
        """Counts per label 0..K (unoccupied labels report zero)."""
        return np.bincount(self.labels, minlength=self.K + 1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.labels, other.labels)
