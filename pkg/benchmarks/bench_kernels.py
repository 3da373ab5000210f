"""Compare the compiled kernels with the numpy fallback.

Times the two hot kernels (exhaustive kNN search and the sparse dual
products driving the degree propagation) plus a full t sweep, on both
backends, and checks that their outputs agree bit for bit.

    python benchmarks/bench_kernels.py --sizes 1000 4000 --k 10 --t 50
"""

import argparse
import time

import numpy as np

from hiclust import backend, geometry
from hiclust.geometry import GaussianExponential, build_knn_digraph
from hiclust.hi import sweep


def best_of(fn, repeats):
    times, out = [], None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def run_products(kern, args, t):
    d_out = d_in = np.full(len(args[0]) - 1, 1.0)
    for _ in range(t):
        d_out, d_in = kern.dual_products(*args, d_out, d_in)
        s = 0.5 * (d_out.sum() + d_in.sum())
        d_out, d_in = d_out / s, d_in / s
    return d_out, d_in


def run_sweep(kern, graph, t):
    saved = geometry.kernels
    geometry.kernels = kern
    try:
        return sweep(graph, t).residual
    finally:
        geometry.kernels = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 4000])
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--t", type=int, default=50)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if backend.compiled is None:
        raise SystemExit("compiled backend unavailable; build it with `pip install -e . --no-build-isolation`")
    backends = {"cython": backend.compiled, "python": backend.fallback}
    rng = np.random.default_rng(args.seed)

    print(f"{'kernel':<14}{'n':>8}{'cython s':>12}{'python s':>12}{'speedup':>10}  identical")
    for n in args.sizes:
        X = np.ascontiguousarray(rng.normal(size=(n, args.dim)))
        graph = build_knn_digraph(X, args.k, GaussianExponential())
        prod_args = graph._products_args(np.ones(n), np.ones(n))[:6]
        cases = {
            "knn_search": lambda kern: kern.knn_search(X, args.k, 0),
            "dual_products": lambda kern: run_products(kern, prod_args, args.t),
            "sweep": lambda kern: run_sweep(kern, graph, args.t),
        }
        for name, fn in cases.items():
            (tc, oc), (tp, op) = (best_of(lambda: fn(b), args.repeats) for b in backends.values())
            same = all(np.array_equal(a, b) for a, b in zip(oc, op))
            print(f"{name:<14}{n:>8}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
