"""Independent reference computations used only by the tests.

Everything here is written in the most direct way possible (dense matrices,
Python loops, explicit enumeration) and shares no code with the package
beyond data containers.
"""

import itertools
import math
from collections import Counter

import numpy as np


def brute_knn(X, k, cosine=False):
    """k nearest neighbours of every row by exhaustive sorting.

    Ties are broken by smallest index; a point is never its own neighbour.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    if cosine:
        U = X / np.linalg.norm(X, axis=1, keepdims=True)
    out = []
    for i in range(n):
        keyed = []
        for j in range(n):
            if j == i:
                continue
            if cosine:
                key = 1.0 - float(U[i] @ U[j])
            else:
                key = sum((a - b) ** 2 for a, b in zip(X[i], X[j]))
            keyed.append((key, j))
        keyed.sort()
        out.append([j for _, j in keyed[:k]])
    return out


def gaussian(a, b, sigma):
    d2 = sum((x - y) ** 2 for x, y in zip(a, b))
    return math.exp(-d2 / sigma**2)


def dense_knn_graph(X, k, sigma):
    """Dense W: 1 on the diagonal, Gaussian similarity at the k NNs."""
    X = np.asarray(X, dtype=float)
    n = len(X)
    W = np.eye(n)
    for i, nbrs in enumerate(brute_knn(X, k)):
        for j in nbrs:
            W[i, j] = gaussian(X[i], X[j], sigma)
    return W


def path_sum(W, i, j, t):
    """(W**t)[i, j] by enumerating every length-t walk from i to j."""
    n = len(W)
    total = 0.0
    for mid in itertools.product(range(n), repeat=t - 1):
        walk = (i, *mid, j)
        p = 1.0
        for a, b in zip(walk, walk[1:]):
            p *= W[a, b]
        total += p
    return total


def raw_degrees(W, t):
    """Unnormalised ``((W**t).T @ 1, W**t @ 1)`` from a dense power."""
    P = np.linalg.matrix_power(np.asarray(W, dtype=float), t)
    return P.sum(axis=0), P.sum(axis=1)


def leave_one_out(W, c_cluster, cluster_j, i, t):
    """rho from raw path sums on the two induced dense subgraphs."""
    full = sorted(c_cluster)
    kept = [v for v in full if v not in set(cluster_j)]
    W = np.asarray(W, dtype=float)
    din_f, dout_f = raw_degrees(W[np.ix_(full, full)], t)
    din_s, dout_s = raw_degrees(W[np.ix_(kept, kept)], t)
    a, b = full.index(i), kept.index(i)
    return 1.0 - (din_s[b] * dout_s[b]) / (din_f[a] * dout_f[a])


def entropy(labels):
    n = len(labels)
    return -sum(c / n * math.log(c / n) for c in Counter(labels).values())


def nmi(a, b):
    """I(A;B) / sqrt(H(A) H(B)) from enumerated joint frequencies."""
    a, b = list(a), list(b)
    n = len(a)
    pa, pb, pab = Counter(a), Counter(b), Counter(zip(a, b))
    mi = sum(c / n * math.log((c / n) / ((pa[x] / n) * (pb[y] / n))) for (x, y), c in pab.items())
    ha, hb = entropy(a), entropy(b)
    if ha == 0 or hb == 0:
        return 1.0 if ha == hb == 0 else 0.0
    return mi / math.sqrt(ha * hb)
