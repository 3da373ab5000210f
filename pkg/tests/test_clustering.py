import numpy as np
import pytest
from oracles import brute_knn, dense_knn_graph, leave_one_out

from hiclust.clustering import (
    CoreClusters,
    CoreStage,
    UnionFind,
    aggregate_to_cores,
    attachment_score,
    attachment_scores,
    find_cores,
    homophilic_clustering,
    merge_candidates,
    merge_cores,
)
from hiclust.errors import InvalidInputError
from hiclust.evaluation import nmi
from hiclust.geometry import GaussianExponential, SparseDigraph, build_knn_digraph

G1 = GaussianExponential(1.0)


def blobs(rng, centers, per, scale=0.3):
    return np.vstack([np.asarray(c) + scale * rng.normal(size=(per, 2)) for c in centers])


class TestUnionFind:
    def test_basic(self):
        uf = UnionFind(5)
        assert uf.union(0, 1) and uf.union(3, 4) and not uf.union(1, 0)
        assert uf.components == 3
        lab = uf.labels()
        assert lab[0] == lab[1] and lab[3] == lab[4] and len(set(lab.tolist())) == 3


class TestMergeCandidates:
    @pytest.mark.parametrize("link", ["mutual", "either"])
    def test_match_brute_force(self, rng, link):
        X = rng.normal(size=(40, 2))
        cores = np.sort(rng.choice(40, 25, replace=False))
        hbar = rng.uniform(0.5, 2, 40)
        i, j, hsim = merge_candidates(X, cores, hbar, 3, G1, link)
        nn = brute_knn(X[cores], 3)
        links = {(a, b) for a in range(25) for b in nn[a]}
        if link == "mutual":
            pairs = {(min(a, b), max(a, b)) for a, b in links if (b, a) in links}
        else:
            pairs = {(min(a, b), max(a, b)) for a, b in links}
        expected = {(int(cores[a]), int(cores[b])) for a, b in pairs}
        got = set(zip(i.tolist(), j.tolist()))
        assert got == expected and len(got) == len(i)
        for a, b, h in zip(i, j, hsim):
            assert h == pytest.approx(hbar[a] * hbar[b] * np.exp(-np.sum((X[a] - X[b]) ** 2)), rel=1e-12)

    def test_unknown_link(self):
        with pytest.raises(InvalidInputError):
            merge_candidates(np.zeros((3, 2)), [0, 1, 2], np.ones(3), 1, G1, "both")


class TestMerge:
    @pytest.mark.parametrize("link", ["mutual", "either"])
    def test_two_separated_clusters_kc1(self, link):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [100.0, 0.0], [101.0, 0.0]])
        cc = merge_cores(X, [0, 1, 2, 3], np.ones(4), 1, G1, link=link)
        assert [c.tolist() for c in cc.clusters] == [[0, 1], [2, 3]]
        assert cc.merge_curve == [4, 3, 2]

    def test_target_equals_core_count(self, rng):
        X = rng.normal(size=(12, 2))
        cc = merge_cores(X, range(12), np.ones(12), 5, G1, target_c=12)
        assert cc.c == 12 and all(len(c) == 1 for c in cc.clusters)

    def test_target_reached_exactly(self, rng):
        X = blobs(rng, [(0, 0), (6, 0), (0, 6)], 10)
        for target in (3, 7, 20):
            assert merge_cores(X, range(30), np.ones(30), 5, G1, target_c=target).c == target
        # no link crosses the gaps, so merging converges at 3 before reaching 1
        assert merge_cores(X, range(30), np.ones(30), 5, G1, target_c=1).c == 3

    def test_errors(self, rng):
        X = rng.normal(size=(6, 2))
        with pytest.raises(InvalidInputError):
            merge_cores(X, range(6), np.ones(6), 3, G1, target_c=7)
        with pytest.raises(InvalidInputError):
            merge_cores(X, [], np.ones(6), 3, G1)
        for kc in (0, 6):
            with pytest.raises(InvalidInputError):
                merge_cores(X, range(6), np.ones(6), kc, G1)

    def test_partition_and_monotone_curve(self, rng):
        X = blobs(rng, [(0, 0), (5, 5)], 20)
        cores = np.sort(rng.choice(40, 30, replace=False))
        cc = merge_cores(X, cores, rng.uniform(1, 2, 40), 3, G1)
        members = np.concatenate(cc.clusters)
        assert sorted(members.tolist()) == cores.tolist()
        assert all(np.diff(cc.merge_curve) == -1)
        assert [c[0] for c in cc.clusters] == sorted(c[0] for c in cc.clusters)

    def test_hbar_scaling_leaves_clusters(self, rng):
        X = blobs(rng, [(0, 0), (3, 0), (0, 3)], 12, scale=0.8)
        hbar = rng.uniform(1, 3, 36)
        a = merge_cores(X, range(36), hbar, 2, G1, target_c=4)
        b = merge_cores(X, range(36), hbar * 7.5, 2, G1, target_c=4)
        assert [c.tolist() for c in a.clusters] == [c.tolist() for c in b.clusters]

    def test_labels(self):
        cc = CoreClusters([np.array([1, 3]), np.array([4])])
        assert cc.labels(6).tolist() == [0, 1, 0, 1, 2, 0]


def two_component_graph():
    """Nodes 0-2 form one component, 3-5 another."""
    src, dst, w = [], [], []
    for a, b, x in [(0, 1, 0.5), (1, 0, 0.25), (1, 2, 0.75), (2, 0, 0.5),
                    (3, 4, 0.5), (4, 5, 0.5), (5, 3, 0.25)]:
        src.append(a), dst.append(b), w.append(x)
    for v in range(6):
        src.append(v), dst.append(v), w.append(1.0)
    return SparseDigraph.from_edges(6, src, dst, w)


class TestAttachment:
    def test_disconnected_cluster_gives_zero(self):
        g = two_component_graph()
        for t in (1, 3, 10):
            assert attachment_score(g, 0, [3, 4], t) == 0.0
            assert attachment_score(g, 5, [1, 2], t) == 0.0

    def test_halving_gives_three_quarters(self):
        # i=0 has a self-loop and a two-way unit edge to j=1: removing 1
        # halves both raw degrees of 0 at t=1
        g = SparseDigraph.from_edges(3, [0, 0, 1, 1, 2], [0, 1, 0, 1, 2], [1.0] * 5)
        assert attachment_score(g, 0, [1], 1) == 0.75

    def test_matches_dense_oracle(self, rng):
        for trial in range(4):
            X = blobs(rng, [(0, 0), (4, 0), (2, 3)], 15, scale=0.9)
            X = np.vstack([X, rng.uniform(-2, 6, size=(10, 2))])
            g = build_knn_digraph(X, 4, GaussianExponential(1.5))
            W = dense_knn_graph(X, 4, 1.5)
            c_cluster = np.sort(rng.choice(55, 48, replace=False))
            pool = rng.permutation(c_cluster)
            clusters = [np.sort(pool[:6]), np.sort(pool[6:12]), np.sort(pool[12:16])]
            t = int(rng.integers(1, 12))
            queries, rho = attachment_scores(g, c_cluster, clusters, t)
            assert queries.tolist() == sorted(set(c_cluster.tolist()) - set(pool[:16].tolist()))
            for qi, q in enumerate(queries):
                for j, cl in enumerate(clusters):
                    expected = leave_one_out(W, c_cluster.tolist(), cl.tolist(), int(q), t)
                    assert abs(rho[qi, j] - expected) <= 1e-9
            assert np.all(rho <= 1)

    def test_batch_equals_single(self, rng):
        X = blobs(rng, [(0, 0), (3, 0)], 10)
        g = build_knn_digraph(X, 3, G1)
        clusters = [np.array([0, 1, 2]), np.array([10, 11])]
        q, rho = attachment_scores(g, np.arange(20), clusters, 4)
        i = int(q[5])
        assert rho[5, 1] == attachment_score(g, i, clusters[1], 4)

    def test_errors(self, rng):
        g = build_knn_digraph(rng.normal(size=(8, 2)), 2, G1)
        with pytest.raises(InvalidInputError):
            attachment_score(g, 1, [1, 2], 2)
        with pytest.raises(InvalidInputError):
            attachment_score(g, 0, [1, 2], 2, c_cluster=[0, 1, 2])
        with pytest.raises(InvalidInputError):
            attachment_score(g, 0, [1, 2], 0)
        with pytest.raises(InvalidInputError):
            attachment_scores(g, [0, 1, 2], [[5]], 1)


class TestAggregate:
    def test_single_cluster(self, rng):
        g = build_knn_digraph(rng.normal(size=(20, 2)), 3, G1)
        c_cluster = np.arange(15)
        lab = aggregate_to_cores(g, c_cluster, CoreClusters([np.array([2, 3, 7])]), 3)
        assert lab[:15].tolist() == [1] * 15 and lab[15:].tolist() == [0] * 5

    def test_symmetric_tie_goes_to_first(self):
        # 0 sits between mirror images {1, 2} and {3, 4}; dyadic weights keep
        # the arithmetic exact so both rho values are identical
        e = [(0, 1), (0, 3), (1, 0), (3, 0), (1, 2), (2, 1), (3, 4), (4, 3)]
        src = [a for a, _ in e] + list(range(5))
        dst = [b for _, b in e] + list(range(5))
        g = SparseDigraph.from_edges(5, src, dst, [0.5] * len(e) + [1.0] * 5)
        _, rho = attachment_scores(g, np.arange(5), [[1, 2], [3, 4]], 3)
        assert rho[0, 0] == rho[0, 1]
        lab = aggregate_to_cores(g, np.arange(5), CoreClusters([np.array([1, 2]), np.array([3, 4])]), 3)
        assert lab.tolist() == [1, 1, 1, 2, 2]

    def test_totality(self, rng):
        X = blobs(rng, [(0, 0), (5, 0)], 15)
        g = build_knn_digraph(X, 4, G1)
        c_cluster = np.arange(2, 28)
        cc = CoreClusters([np.array([3, 4, 5]), np.array([20, 21])])
        lab = aggregate_to_cores(g, c_cluster, cc, 2)
        assert np.all(lab[c_cluster] >= 1) and np.all(lab[[0, 1, 28, 29]] == 0)
        assert set(lab.tolist()) <= {0, 1, 2}


class TestPipeline:
    def test_single_tight_blob(self, rng):
        X = 0.05 * rng.normal(size=(300, 2))
        labels, diag = homophilic_clustering(X, k=10, measure=G1, t_max=100)
        counts = np.bincount(labels)
        assert counts[1:].max() >= 0.99 * len(X)

    def test_three_blobs_in_noise(self, rng):
        X = np.vstack([blobs(rng, [(0, 0), (10, 0), (5, 8)], 120, scale=0.6),
                       rng.uniform(-8, 18, size=(150, 2))])
        truth = np.r_[np.repeat([1, 2, 3], 120), np.zeros(150, int)]
        labels, diag = homophilic_clustering(X, k=15, measure=GaussianExponential(1.0), t_max=150,
                                             target_c=3)
        assert diag.n_clusters == 3
        assert nmi(truth, labels) >= 0.9

    def test_permutation_equivariance(self, toy, toy_result):
        points, _, p, _ = toy
        labels, _ = toy_result
        perm = np.random.default_rng(7).permutation(points.n)
        lab2, _ = homophilic_clustering(
            points.data[perm], k=p["k"], k_c=p["kc"], measure=GaussianExponential(p["sigma"]),
            t_max=p["tmax"], jump_threshold=p["jump_threshold"],
        )
        a = labels[perm]
        assert np.array_equal(a == 0, lab2 == 0)
        assert nmi(a, lab2, include_noise=True) == 1.0

    def test_diagnostics(self, toy_result):
        labels, diag = toy_result
        d = diag.to_dict()
        assert d["t_star"] == diag.t_star and d["jumps"] == diag.jumps
        assert d["feasible_interval"][0] <= diag.t_star <= d["feasible_interval"][1]
        assert len(d["residual"]) == len(d["ts"]) == len(d["g"])
        assert set(diag.c_max_ids) <= set(diag.c_cluster_ids)
        assert set(diag.core_ids) <= set(diag.c_cluster_ids)
        in_cluster = np.zeros(labels.size, bool)
        in_cluster[diag.c_cluster_ids] = True
        assert np.all(labels[in_cluster] >= 1) and np.all(labels[~in_cluster] == 0)

    def test_stage_round_trip(self, toy):
        points, _, p, _ = toy
        g = build_knn_digraph(points, p["k"], GaussianExponential(p["sigma"]))
        stage = find_cores(g, p["tmax"], p["jump_threshold"])
        again = CoreStage.from_dict(stage.to_dict())
        assert again.to_dict() == stage.to_dict()

    def test_invalid_kc(self, rng):
        with pytest.raises(InvalidInputError):
            homophilic_clustering(rng.normal(size=(20, 2)), k=3, k_c=6)

    def test_toy_cores_cover_every_planted_cluster(self, toy, toy_result):
        _, truth, _, _ = toy
        _, diag = toy_result
        assert set(np.unique(truth[diag.core_ids]).tolist()) >= {1, 2, 3, 4, 5}

    def test_toy_first_jump_brute_force(self, toy, toy_result):
        points, truth, p, _ = toy
        _, diag = toy_result
        W = build_knn_digraph(points, p["k"], GaussianExponential(p["sigma"])).to_dense()
        n = len(W)
        # unnormalised degrees; the ratio and the ordering do not depend on scale
        din, dout, res = np.ones(n), np.ones(n), []
        for _ in range(diag.jumps[0]):
            din, dout = W.T @ din, W @ dout
            order = np.argsort(-dout, kind="stable")
            above = np.flatnonzero((din / dout)[order] >= 1.0)
            res.append(n - 1 - above[-1] if above.size else n)
        rises = np.flatnonzero(np.diff(res) >= p["jump_threshold"])
        assert rises.size and rises[0] + 2 == diag.jumps[0]
