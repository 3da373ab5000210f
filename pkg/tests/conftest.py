import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from hiclust.geometry import GaussianExponential, SparseDigraph, build_knn_digraph  # noqa: E402

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def random_knn_graph(rng, n, k, sigma=None):
    X = rng.normal(size=(n, 2))
    return build_knn_digraph(X, k, GaussianExponential(sigma))


def random_digraph(rng, n, density=0.3):
    """A general weighted digraph with self-loops (not necessarily kNN)."""
    W = np.where(rng.random((n, n)) < density, rng.random((n, n)), 0.0)
    np.fill_diagonal(W, 1.0)
    src, dst = np.nonzero(W)
    return SparseDigraph.from_edges(n, src, dst, W[src, dst])


def symmetrize(graph):
    W = graph.to_dense()
    S = np.maximum(W, W.T)
    src, dst = np.nonzero(S)
    return SparseDigraph.from_edges(graph.n, src, dst, S[src, dst])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def toy():
    """The bundled toy data set, its labels and its pipeline parameters."""
    import json
    from importlib import resources

    from hiclust.evaluation import generate_toy, toy_spec

    cfg = json.loads(resources.files("hiclust").joinpath("data/toy.json").read_text())
    points, truth = generate_toy(toy_spec())
    return points, truth, cfg["pipeline"], cfg


@pytest.fixture(scope="session")
def toy_result(toy):
    from hiclust.clustering import homophilic_clustering

    points, truth, p, _ = toy
    labels, diag = homophilic_clustering(
        points, k=p["k"], k_c=p["kc"], measure=GaussianExponential(p["sigma"]), t_max=p["tmax"],
        jump_threshold=p["jump_threshold"], link=p["link"],
    )
    return labels, diag


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
