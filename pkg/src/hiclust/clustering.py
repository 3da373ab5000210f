"""Homophilic clustering: merge cores, then attach the remaining cluster points.

Cores are merged pair by pair in order of homophily-weighted similarity
``hbar_i * hbar_j * sim(x_i, x_j)`` over k_c-nearest-neighbour links.
Every other point inside the cluster/noise boundary goes to the core cluster
whose removal costs it the largest share of its degree product
``d_in * d_out`` (leave-one-out).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .backend import BACKEND
from .errors import InvalidInputError
from .geometry import as_points, build_knn_digraph, key_to_similarity, knn, local_density
from .hi import (
    default_jump_threshold,
    extract_cores,
    homophilic_coefficients,
    noise_boundary,
    Sweep,
    select_from_curve,
    sweep,
)
from .propagation import iter_degrees, propagate

log = logging.getLogger(__name__)

NOISE = 0
LINK_MODES = ("mutual", "either")


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of x and y; False if they were already one set."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        self.components -= 1
        return True

    def labels(self) -> np.ndarray:
        return np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class CoreClusters:
    """Disjoint core clusters, ordered by their smallest member id.

    ``merge_curve[s]`` is the number of components after merge step ``s``
    (``merge_curve[0]`` is the number of cores).
    """

    clusters: list
    merge_curve: list = field(default_factory=list)

    @property
    def c(self) -> int:
        return len(self.clusters)

    def labels(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=np.int64)
        for j, members in enumerate(self.clusters, start=1):
            out[members] = j
        return out


def merge_candidates(points, cores, hbar, k_c: int, measure, link: str = "either"):
    """Linked k_c-NN pairs among the cores with their hsim.

    ``link="mutual"`` keeps ``(i, j)`` only when each is among the other's
    k_c nearest cores; ``link="either"`` keeps it when one direction holds.
    Returns ``(i, j, hsim)`` arrays of global ids with ``i < j``.
    """
    if link not in LINK_MODES:
        raise InvalidInputError(f"link must be one of {LINK_MODES}, got {link!r}")
    cores = np.asarray(cores, dtype=np.int64)
    n_c = cores.size
    kk = min(k_c, n_c - 1)
    if kk < 1:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, np.empty(0)
    nbr, key = knn(as_points(points).data[cores], kk, measure)
    sim = key_to_similarity(key, measure)
    src = np.repeat(np.arange(n_c, dtype=np.int64), kk)
    dst = nbr.ravel()
    sim = sim.ravel()
    # (i, j) is mutual when (j, i) also appears; encode pairs as i * n_c + j
    fwd = src * n_c + dst
    rev = dst * n_c + src
    if link == "mutual":
        pick = np.isin(rev, fwd) & (src < dst)
    else:
        # one-way links enter as (min, max); two-way links only once
        pick = (src < dst) | ~np.isin(rev, fwd)
    i = np.minimum(src, dst)[pick]
    j = np.maximum(src, dst)[pick]
    s = sim[pick]
    hb = np.asarray(hbar, dtype=np.float64)[cores]
    hsim = hb[i] * hb[j] * s
    return cores[i], cores[j], hsim


def merge_cores(points, cores, hbar, k_c: int, measure, target_c: int | None = None,
                link: str = "either") -> CoreClusters:
    """Union cores along k_c-NN links, strongest hsim first.

    Stops once ``target_c`` components remain, otherwise when candidates run
    out.  Ties in hsim are broken by ``(min id, max id)`` ascending.
    """
    cores = np.unique(np.asarray(cores, dtype=np.int64))
    if cores.size == 0:
        raise InvalidInputError("cannot merge an empty core set")
    if not 1 <= k_c <= 5:
        raise InvalidInputError(f"k_c must lie in [1, 5], got {k_c}")
    if target_c is not None and not 1 <= target_c <= cores.size:
        raise InvalidInputError(f"target_c={target_c} outside [1, {cores.size}]")

    i, j, hsim = merge_candidates(points, cores, hbar, k_c, measure, link)
    order = np.lexsort((j, i, -hsim))
    local = {int(g): r for r, g in enumerate(cores)}
    uf = UnionFind(cores.size)
    curve = [uf.components]
    for p in order:
        if target_c is not None and uf.components <= target_c:
            break
        if uf.union(local[int(i[p])], local[int(j[p])]):
            curve.append(uf.components)

    roots = uf.labels()
    groups = {}
    for r, root in enumerate(roots):
        groups.setdefault(int(root), []).append(cores[r])
    clusters = sorted((np.array(g, dtype=np.int64) for g in groups.values()), key=lambda g: g[0])
    return CoreClusters(clusters, curve)


def _propagate_with_scales(graph, t):
    scales = []
    state = None
    for state in iter_degrees(graph, t):
        scales.append(state.scale)
    return state, scales


def attachment_scores(graph, c_cluster, clusters, t: int, queries=None):
    """Leave-one-out ratios ``rho[q, j] = 1 - gamma_without_j / gamma_full``.

    ``graph`` is the full kNN digraph.  Both degree runs use the subgraph
    induced on ``c_cluster`` (minus cluster ``j`` for the second) with the
    original edges, and share the per-step normalisers of the full run, so
    ``gamma`` ratios equal ratios of unnormalised path sums.  Queries
    default to the non-core members of ``c_cluster``.

    Returns ``(queries, rho)`` with ``rho`` of shape ``(len(queries), c)``.
    """
    c_cluster = np.unique(np.asarray(c_cluster, dtype=np.int64))
    clusters = [np.unique(np.asarray(c, dtype=np.int64)) for c in clusters]
    if t < 1:
        raise InvalidInputError(f"t must be >= 1, got {t}")
    core_ids = np.concatenate(clusters) if clusters else np.empty(0, dtype=np.int64)
    if not np.all(np.isin(core_ids, c_cluster)):
        raise InvalidInputError("every core must lie inside the cluster set")
    if queries is None:
        queries = np.setdiff1d(c_cluster, core_ids)
    queries = np.asarray(queries, dtype=np.int64)
    if not np.all(np.isin(queries, c_cluster)):
        raise InvalidInputError("queries must lie inside the cluster set")
    rho = np.zeros((queries.size, len(clusters)))
    if queries.size == 0:
        return queries, rho
    if c_cluster.size < 2:
        raise InvalidInputError("cluster set has fewer than 2 points")

    full = graph.induced_subgraph(c_cluster)
    state, scales = _propagate_with_scales(full, t)
    q_full = np.searchsorted(c_cluster, queries)
    gamma_full = state.d_in[q_full] * state.d_out[q_full]

    for col, members in enumerate(clusters):
        if np.any(np.isin(queries, members)):
            raise InvalidInputError("a query point belongs to the cluster being removed")
        keep = np.setdiff1d(c_cluster, members)
        if keep.size < 2:
            raise InvalidInputError("fewer than 2 points survive the leave-one-out removal")
        sub_state = propagate(graph.induced_subgraph(keep), t, scales=scales)
        q_sub = np.searchsorted(keep, queries)
        gamma = sub_state.d_in[q_sub] * sub_state.d_out[q_sub]
        rho[:, col] = 1.0 - gamma / gamma_full
    return queries, rho


def attachment_score(graph, i: int, cluster_j, t: int, c_cluster=None) -> float:
    """``rho`` of a single point ``i`` for one cluster; see :func:`attachment_scores`."""
    if c_cluster is None:
        c_cluster = np.arange(graph.n)
    cluster_j = np.asarray(cluster_j, dtype=np.int64)
    if i in set(cluster_j.tolist()):
        raise InvalidInputError("the point must not belong to the removed cluster")
    _, rho = attachment_scores(graph, c_cluster, [cluster_j], t, queries=[i])
    return float(rho[0, 0])


def aggregate_to_cores(graph, c_cluster, core_clusters: CoreClusters, t: int) -> np.ndarray:
    """Final labels: cores keep their cluster, other members of ``c_cluster``
    take the argmax-rho cluster (first index on ties), the rest are noise (0)."""
    labels = np.full(graph.n, NOISE, dtype=np.int64)
    c_cluster = np.asarray(c_cluster, dtype=np.int64)
    if core_clusters.c == 0:
        return labels
    queries, rho = attachment_scores(graph, c_cluster, core_clusters.clusters, t)
    if queries.size:
        labels[queries] = np.argmax(rho, axis=1) + 1
    for j, members in enumerate(core_clusters.clusters, start=1):
        labels[members] = j
    return labels


@dataclass
class Diagnostics:
    k: int
    k_c: int
    t_max: int
    sigma: float | None
    measure: str
    jump_threshold: int
    ts: list
    residual: list
    g: list
    n_cores: list
    jumps: list
    t_first_jump: int
    c_max_ids: list
    c_cluster_ids: list
    t_star: int
    feasible_interval: list
    core_ids: list
    merge_curve: list
    n_clusters: int
    link: str = "either"
    truncated_at: int | None = None
    backend: str = BACKEND
    seed: int | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["g"] = [None if np.isnan(v) else float(v) for v in self.g]
        return out


@dataclass(frozen=True, eq=False)
class CoreStage:
    """Output of the sweep stage: everything needed to merge and attach."""

    sweep: Sweep
    t_first: int
    c_max: np.ndarray
    c_cluster: np.ndarray
    t_star: int
    interval: tuple
    cores: np.ndarray

    def to_dict(self) -> dict:
        sw = self.sweep
        return dict(
            n=sw.n, jump_threshold=sw.threshold, ts=list(sw.ts), residual=list(sw.residual),
            g=[None if np.isnan(v) else float(v) for v in sw.g], n_cores=list(sw.n_cores),
            jumps=list(sw.jumps), truncated_at=sw.truncated_at, t_first_jump=self.t_first,
            c_max_ids=self.c_max.tolist(), c_cluster_ids=self.c_cluster.tolist(),
            t_star=self.t_star, feasible_interval=list(self.interval), core_ids=self.cores.tolist(),
        )

    @classmethod
    def from_dict(cls, d: dict) -> "CoreStage":
        try:
            sw = Sweep(
                list(d["ts"]), list(d["residual"]), [np.nan if v is None else float(v) for v in d["g"]],
                list(d["n_cores"]), list(d["jumps"]), int(d["n"]), int(d["jump_threshold"]),
                d.get("truncated_at"),
            )
            ids = lambda key: np.asarray(d[key], dtype=np.int64).reshape(-1)
            return cls(sw, int(d["t_first_jump"]), ids("c_max_ids"), ids("c_cluster_ids"),
                       int(d["t_star"]), tuple(d["feasible_interval"]), ids("core_ids"))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed core-stage record: {exc}") from exc


def find_cores(graph, t_max: int, jump_threshold: int | None = None) -> CoreStage:
    """Sweep stage of the pipeline: jumps, boundary and the selected power.

    ``C_max`` is the core set at the first jump; ``C_cluster`` is the set of
    points at least as dense as its sparsest member, plus the cores at
    ``t_star``.
    """
    J = default_jump_threshold(graph.n) if jump_threshold is None else int(jump_threshold)
    sw = sweep(graph, t_max, threshold=J)
    if sw.truncated_at is not None:
        log.warning("degrees underflow at t=%d; sweep stopped at t=%d", sw.truncated_at, sw.ts[-1])
    t_star, interval = select_from_curve(sw.ts, sw.g, sw.jumps, sw.ts[-1])
    t_first = sw.jumps[0]
    c_max = extract_cores(homophilic_coefficients(propagate(graph, t_first)))
    c_cluster = noise_boundary(local_density(graph), c_max)
    cores = extract_cores(homophilic_coefficients(propagate(graph, t_star)))
    # cores are cluster members by definition even if their density is low
    c_cluster = np.union1d(c_cluster, cores)
    log.info("jumps %s, t_star %d, %d cores, %d cluster points", sw.jumps, t_star, cores.size, c_cluster.size)
    return CoreStage(sw, t_first, c_max, c_cluster, t_star, interval, cores)


def homophilic_clustering(points, k: int = 10, k_c: int = 5, measure=None, t_max: int = 200,
                          target_c: int | None = None, jump_threshold: int | None = None,
                          graph=None, link: str = "either", stage: CoreStage | None = None):
    """Run the full pipeline on ``points``.

    Parameters
    ----------
    points : PointSet or array-like (n, d)
    k : int
        Neighbours per point in the digraph.
    k_c : int
        Neighbours per core when merging, in [1, 5].
    measure : GaussianExponential or Cosine, optional
    t_max : int
        Largest power swept when looking for jump transitions.
    target_c : int, optional
        Stop merging at this many clusters.
    jump_threshold : int, optional
        Minimal residual-distance rise counted as a jump.
    graph : DirectedKnnGraph, optional
        Prebuilt digraph of ``points`` (skips construction).
    link : {"either", "mutual"}
        Which core k_c-NN pairs may merge: a link in either direction, or
        only reciprocal ones.
    stage : CoreStage, optional
        Result of :func:`find_cores` on ``graph`` (skips the sweep).

    Returns
    -------
    labels : ndarray of int
        Cluster ids ``1..c``, 0 for noise.
    diagnostics : Diagnostics
    """
    points = as_points(points)
    if graph is None:
        graph = build_knn_digraph(points, k, measure)
    if graph.n != points.n:
        raise InvalidInputError(f"graph has {graph.n} nodes but there are {points.n} points")
    measure = graph.measure
    if not 1 <= k_c <= 5:
        raise InvalidInputError(f"k_c must lie in [1, 5], got {k_c}")
    if stage is None:
        stage = find_cores(graph, t_max, jump_threshold)
    elif stage.sweep.n != graph.n:
        raise InvalidInputError("core stage was computed on a different graph")
    hbar = homophilic_coefficients(propagate(graph, stage.t_star))
    merged = merge_cores(points, stage.cores, hbar, k_c, measure, target_c, link)
    labels = aggregate_to_cores(graph, stage.c_cluster, merged, stage.t_star)
    sw = stage.sweep
    diag = Diagnostics(
        k=graph.k, k_c=k_c, t_max=t_max, sigma=getattr(measure, "sigma", None),
        measure=type(measure).__name__, jump_threshold=sw.threshold,
        ts=sw.ts, residual=sw.residual, g=sw.g, n_cores=sw.n_cores, jumps=sw.jumps,
        t_first_jump=stage.t_first, c_max_ids=stage.c_max.tolist(),
        c_cluster_ids=stage.c_cluster.tolist(), t_star=stage.t_star,
        feasible_interval=list(stage.interval), core_ids=stage.cores.tolist(),
        merge_curve=merged.merge_curve, n_clusters=merged.c, link=link,
        truncated_at=sw.truncated_at,
    )
    return labels, diag
