"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Accumulation order matches the compiled loops exactly (left to right over
stored entries, then over coordinates), so both backends return bitwise
identical arrays.
"""

import numpy as np


def _csr_matvec(indptr, indices, data, x):
    n = len(indptr) - 1
    lengths = np.diff(indptr)
    order = np.argsort(-lengths, kind="stable")
    sorted_len = lengths[order]
    starts = indptr[:-1][order]
    acc = np.zeros(n)
    max_len = int(sorted_len[0]) if n else 0
    for s in range(max_len):
        # rows are sorted by length, so rows with more than s entries form a prefix
        m = int(np.count_nonzero(sorted_len > s))
        pos = starts[:m] + s
        acc[:m] = acc[:m] + data[pos] * x[indices[pos]]
    out = np.empty(n)
    out[order] = acc
    return out


def dual_products(indptr, indices, data, t_indptr, t_indices, t_data, d_out, d_in):
    """Return ``(W @ d_out, W.T @ d_in)`` for a CSR matrix and its CSR transpose."""
    return (
        _csr_matvec(indptr, indices, data, d_out),
        _csr_matvec(t_indptr, t_indices, t_data, d_in),
    )


def knn_search(X, k, metric):
    """Exhaustive k nearest neighbours of every row, self excluded.

    See ``_kernels.knn_search`` for the metric codes and tie rule.
    """
    n, d = X.shape
    nbr = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k), dtype=np.float64)
    # working set per block is O(block * n): linear in n for fixed k
    block = max(1, 8 * k)
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        acc = np.zeros((hi - lo, n))
        for c in range(d):
            if metric == 0:
                diff = X[lo:hi, c, None] - X[None, :, c]
                acc += diff * diff
            else:
                acc += X[lo:hi, c, None] * X[None, :, c]
        if metric != 0:
            acc = 1.0 - acc
        acc[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        order = np.argsort(acc, axis=1, kind="stable")[:, :k]
        nbr[lo:hi] = order
        dist[lo:hi] = np.take_along_axis(acc, order, axis=1)
    return nbr, dist
