"""Point sets, similarity measures and the asymmetric kNN digraph."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .backend import kernels
from .errors import InvalidInputError

__all__ = [
    "PointSet",
    "GaussianExponential",
    "Cosine",
    "SparseDigraph",
    "DirectedKnnGraph",
    "similarity",
    "build_knn_digraph",
    "local_density",
    "knn",
]


@dataclass(frozen=True, eq=False)
class PointSet:
    """An ``n x d`` matrix of finite coordinates, one point per row."""

    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidInputError(f"points must be a non-empty 2-D matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("points contain NaN or infinite coordinates")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __len__(self):
        return self.n


def as_points(points) -> PointSet:
    return points if isinstance(points, PointSet) else PointSet(points)


@dataclass(frozen=True)
class GaussianExponential:
    """``exp(-|a - b|^2 / sigma^2)``.

    ``sigma=None`` means "choose from the data": :func:`build_knn_digraph`
    replaces it by the median kNN distance.
    """

    sigma: float | None = None

    def __post_init__(self):
        if self.sigma is not None and not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidInputError(f"sigma must be a positive finite number, got {self.sigma}")

    metric_code = 0

    def from_sq_distance(self, sq_dist):
        if self.sigma is None:
            raise InvalidInputError("sigma has not been resolved")
        return np.exp(-np.asarray(sq_dist) / self.sigma**2)


@dataclass(frozen=True)
class Cosine:
    """Cosine of the angle, clamped below at 0 so that values lie in [0, 1]."""

    metric_code = 1


def similarity(a, b, measure) -> float:
    """Similarity of two points under ``measure``; always in [0, 1]."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if isinstance(measure, GaussianExponential):
        return float(measure.from_sq_distance(np.sum((a - b) ** 2)))
    if isinstance(measure, Cosine):
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0 or nb == 0:
            raise InvalidInputError("cosine similarity is undefined for a zero vector")
        return float(max(0.0, min(1.0, np.dot(a, b) / (na * nb))))
    raise InvalidInputError(f"unknown similarity measure {measure!r}")


def _unit_rows(X):
    norms = np.sqrt(np.sum(X * X, axis=1))
    if np.any(norms == 0):
        raise InvalidInputError("cosine similarity is undefined for a zero vector")
    return np.ascontiguousarray(X / norms[:, None])


def knn(points, k: int, measure):
    """Exact k nearest neighbours of every point.

    Returns ``(neighbors, key)`` where row ``i`` of ``neighbors`` lists the k
    nearest points to ``i`` (self excluded) in order of increasing distance,
    ties going to the smaller index.  ``key`` is the ranking key: squared
    Euclidean distance for the Gaussian measure, ``1 - cos`` (monotone in the
    angle) for the cosine measure.
    """
    X = as_points(points).data
    n = X.shape[0]
    if not 1 <= k < n:
        raise InvalidInputError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    if isinstance(measure, Cosine):
        X = _unit_rows(X)
    elif not isinstance(measure, GaussianExponential):
        raise InvalidInputError(f"unknown similarity measure {measure!r}")
    return kernels.knn_search(np.ascontiguousarray(X), int(k), measure.metric_code)


def resolve_sigma(sq_dist) -> float:
    """Median kNN distance, falling back to the mean positive distance, then 1."""
    dist = np.sqrt(np.asarray(sq_dist, dtype=np.float64).ravel())
    sigma = float(np.median(dist))
    if sigma > 0:
        return sigma
    positive = dist[dist > 0]
    return float(positive.mean()) if positive.size else 1.0


def key_to_similarity(key, measure):
    if isinstance(measure, Cosine):
        return np.clip(1.0 - key, 0.0, 1.0)
    return measure.from_sq_distance(key)


@dataclass(frozen=True, eq=False)
class SparseDigraph:
    """Weighted digraph stored row-compressed plus a column-compressed copy.

    ``indptr/indices/data`` is the CSR form of ``W`` with column indices
    ascending inside every row; ``t_indptr/t_indices/t_data`` is the CSR form
    of ``W.T`` (row indices ascending inside every column).
    """

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    t_indptr: np.ndarray = field(repr=False)
    t_indices: np.ndarray = field(repr=False)
    t_data: np.ndarray = field(repr=False)

    @classmethod
    def from_csr(cls, indptr, indices, data, **extra):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        data = np.ascontiguousarray(data, dtype=np.float64)
        n = len(indptr) - 1
        rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
        order = np.argsort(indices, kind="stable")
        t_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(indices, minlength=n), out=t_indptr[1:])
        arrays = dict(
            indptr=indptr,
            indices=indices,
            data=data,
            t_indptr=t_indptr,
            t_indices=np.ascontiguousarray(rows[order]),
            t_data=np.ascontiguousarray(data[order]),
        )
        for a in arrays.values():
            a.setflags(write=False)
        return cls(**arrays, **extra)

    @classmethod
    def from_edges(cls, n, src, dst, weight, **extra):
        """Build from an edge list; duplicate ``(src, dst)`` pairs are rejected."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weight = np.asarray(weight, dtype=np.float64)
        if src.size and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n):
            raise InvalidInputError("edge endpoint out of range")
        order = np.lexsort((dst, src))
        src, dst, weight = src[order], dst[order], weight[order]
        if np.any((np.diff(src) == 0) & (np.diff(dst) == 0)):
            raise InvalidInputError("duplicate edge in edge list")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls.from_csr(indptr, dst, weight, **extra)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    @property
    def nnz(self) -> int:
        return len(self.indices)

    @cached_property
    def rows(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))

    def matvec(self, v):
        """``W @ v``, summed in ascending column order."""
        out, _ = kernels.dual_products(*self._products_args(v, v))
        return out

    def rmatvec(self, v):
        """``W.T @ v`` from the column-compressed copy."""
        _, out = kernels.dual_products(*self._products_args(v, v))
        return out

    def _products_args(self, d_out, d_in):
        return (
            self.indptr,
            self.indices,
            self.data,
            self.t_indptr,
            self.t_indices,
            self.t_data,
            np.ascontiguousarray(d_out, dtype=np.float64),
            np.ascontiguousarray(d_in, dtype=np.float64),
        )

    def dual_products(self, d_out, d_in):
        """``(W @ d_out, W.T @ d_in)`` in one kernel call."""
        return kernels.dual_products(*self._products_args(d_out, d_in))

    def to_dense(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        W[self.rows, self.indices] = self.data
        return W

    def edges(self):
        """``(src, dst, weight)`` arrays in row-major order."""
        return self.rows, self.indices, self.data

    def induced_subgraph(self, keep) -> "SparseDigraph":
        """Subgraph on ``keep`` (sorted ascending) keeping surviving edges.

        Node ``keep[r]`` becomes node ``r``; relative order of the stored
        entries is preserved.
        """
        keep = np.unique(np.asarray(keep, dtype=np.int64))
        if keep.size and (keep[0] < 0 or keep[-1] >= self.n):
            raise InvalidInputError("subgraph node id out of range")
        new_id = np.full(self.n, -1, dtype=np.int64)
        new_id[keep] = np.arange(keep.size)
        mask = (new_id[self.rows] >= 0) & (new_id[self.indices] >= 0)
        rows = new_id[self.rows[mask]]
        indptr = np.zeros(keep.size + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=keep.size), out=indptr[1:])
        return SparseDigraph.from_csr(indptr, new_id[self.indices[mask]], self.data[mask])


@dataclass(frozen=True, eq=False)
class DirectedKnnGraph(SparseDigraph):
    """The kNN digraph: row ``i`` holds 1 on the diagonal and ``sim(x_i, x_j)``
    for each of the ``k`` nearest neighbours ``x_j`` of ``x_i``.

    ``neighbors`` keeps the neighbour lists in distance order and ``measure``
    the resolved similarity (sigma filled in).
    """

    k: int = 0
    neighbors: np.ndarray | None = field(default=None, repr=False)
    measure: object = None


def build_knn_digraph(points, k: int, measure=None) -> DirectedKnnGraph:
    """Build the asymmetric kNN digraph of ``points``.

    Parameters
    ----------
    points : PointSet or array-like of shape (n, d)
    k : int
        Neighbours per point, ``1 <= k < n``.  A point is never its own
        neighbour; duplicates of it are.
    measure : GaussianExponential or Cosine, optional
        Defaults to a Gaussian with data-driven sigma.

    Returns
    -------
    DirectedKnnGraph
        No symmetrisation is applied.
    """
    points = as_points(points)
    measure = GaussianExponential() if measure is None else measure
    nbr, key = knn(points, k, measure)
    if isinstance(measure, GaussianExponential) and measure.sigma is None:
        measure = GaussianExponential(resolve_sigma(key))
    weights = key_to_similarity(key, measure)

    n = points.n
    cols = np.hstack([nbr, np.arange(n, dtype=np.int64)[:, None]])
    vals = np.hstack([weights, np.ones((n, 1))])
    order = np.argsort(cols, axis=1, kind="stable")
    cols = np.take_along_axis(cols, order, axis=1)
    vals = np.take_along_axis(vals, order, axis=1)
    indptr = np.arange(n + 1, dtype=np.int64) * (k + 1)
    nbr.setflags(write=False)
    return DirectedKnnGraph.from_csr(
        indptr, cols.ravel(), vals.ravel(), k=int(k), neighbors=nbr, measure=measure
    )


def local_density(graph: SparseDigraph) -> np.ndarray:
    """Mean off-diagonal weight of every row (the kNN local density).

    Rows without off-diagonal entries get density 0.
    """
    rows, cols, w = graph.edges()
    off = rows != cols
    total = np.bincount(rows[off], weights=w[off], minlength=graph.n)
    count = np.bincount(rows[off], minlength=graph.n)
    eta = np.zeros(graph.n)
    np.divide(total, count, out=eta, where=count > 0)
    return eta
