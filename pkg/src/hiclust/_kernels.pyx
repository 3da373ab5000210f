# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: sparse dual products and exhaustive kNN search.

Both kernels accumulate strictly left to right so that their output is
bitwise identical to :mod:`hiclust._fallback`.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

ctypedef cnp.int64_t idx_t


cdef inline void _csr_matvec(const idx_t[::1] indptr, const idx_t[::1] indices,
                             const double[::1] data, const double[::1] x,
                             double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, jj, n = out.shape[0]
    cdef double acc
    for i in range(n):
        acc = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            acc = acc + data[jj] * x[indices[jj]]
        out[i] = acc


def dual_products(const idx_t[::1] indptr, const idx_t[::1] indices,
                  const double[::1] data, const idx_t[::1] t_indptr,
                  const idx_t[::1] t_indices, const double[::1] t_data,
                  const double[::1] d_out, const double[::1] d_in):
    """Return ``(W @ d_out, W.T @ d_in)`` for a CSR matrix and its CSR transpose."""
    cdef Py_ssize_t n = d_out.shape[0]
    new_out = np.empty(n, dtype=np.float64)
    new_in = np.empty(n, dtype=np.float64)
    cdef double[::1] o = new_out
    cdef double[::1] q = new_in
    with nogil:
        _csr_matvec(indptr, indices, data, d_out, o)
        _csr_matvec(t_indptr, t_indices, t_data, d_in, q)
    return new_out, new_in


def knn_search(const double[:, ::1] X, Py_ssize_t k, int metric):
    """Exhaustive k nearest neighbours of every row, self excluded.

    ``metric`` 0 ranks by squared Euclidean distance, 1 by ``1 - <a, b>`` on
    rows that the caller has already scaled to unit length.  Neighbours are
    ordered by (distance, index) so equidistant points resolve to the
    smallest index.
    """
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, c, p, m
    cdef double acc, diff
    nbr = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k), dtype=np.float64)
    cdef idx_t[:, ::1] nb = nbr
    cdef double[:, ::1] ds = dist
    with nogil:
        for i in range(n):
            m = 0
            for p in range(k):
                ds[i, p] = INFINITY
                nb[i, p] = -1
            for j in range(n):
                if j == i:
                    continue
                acc = 0.0
                if metric == 0:
                    for c in range(d):
                        diff = X[i, c] - X[j, c]
                        acc = acc + diff * diff
                else:
                    for c in range(d):
                        acc = acc + X[i, c] * X[j, c]
                    acc = 1.0 - acc
                # j grows monotonically, so a tie never displaces an earlier index
                if m == k and not (acc < ds[i, k - 1]):
                    continue
                if m < k:
                    m += 1
                p = m - 1
                while p > 0 and acc < ds[i, p - 1]:
                    ds[i, p] = ds[i, p - 1]
                    nb[i, p] = nb[i, p - 1]
                    p -= 1
                ds[i, p] = acc
                nb[i, p] = j
    return nbr, dist
