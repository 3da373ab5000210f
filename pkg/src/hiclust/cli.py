"""Command-line interface.

Every subcommand reads files, writes files into ``--out-dir`` and is a pure
function of its inputs and flags.  Outputs are staged under temporary names
and only renamed into place once the whole command has succeeded, so a
failure never leaves partial files behind.  Existing files are not
overwritten unless ``--force`` is given.

Subcommands::

    gen      synthetic points + ground-truth labels    points.csv truth.txt
    graph    kNN digraph as an edge list                graph.txt
    degrees  dual-degree trajectory t = 1..tmax         trajectory.csv
    hi       HI table and figure at one power           hi_table.csv hi_figure.svg
    cores    sweep, jumps, t_star, cores, boundary      cores.json
    cluster  full pipeline                              labels.txt diagnostics.json
                                                        hi_table.csv hi_figure.svg
    eval     NMI between two label files                (stdout)
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from importlib import resources

from . import io as hio
from .backend import BACKEND
from .clustering import LINK_MODES, CoreStage, find_cores, homophilic_clustering
from .errors import HiclustError, InvalidInputError
from .evaluation import SyntheticSpec, generate_toy, nmi
from .geometry import build_knn_digraph
from .hi import hi_profile
from .propagation import iter_degrees, propagate
from .svg import emit_hi_figure

log = logging.getLogger("hiclust")

BUNDLED = "toy"


@dataclass(frozen=True)
class PipelineConfig:
    """Pipeline parameters after merging config file and flags."""

    k: int = 10
    kc: int = 5
    measure: str = "gaussian"
    sigma: float | None = None
    tmax: int = 200
    clusters: int | None = None
    jump_threshold: int | None = None
    seed: int | None = None
    link: str = "either"

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError(f"--k must be >= 1, got {self.k}")
        if not 1 <= self.kc <= 5:
            raise InvalidInputError(f"--kc must lie in [1, 5], got {self.kc}")
        if self.tmax < 1:
            raise InvalidInputError(f"--tmax must be >= 1, got {self.tmax}")
        if self.clusters is not None and self.clusters < 1:
            raise InvalidInputError(f"--clusters must be >= 1, got {self.clusters}")
        if self.jump_threshold is not None and self.jump_threshold < 1:
            raise InvalidInputError(f"--jump-threshold must be >= 1, got {self.jump_threshold}")
        if self.link not in LINK_MODES:
            raise InvalidInputError(f"link must be one of {LINK_MODES}")
        if self.sigma is not None and not self.sigma > 0:
            raise InvalidInputError(f"--sigma must be positive, got {self.sigma}")
        hio.make_measure(self.measure, self.sigma)

    def make_measure(self):
        return hio.make_measure(self.measure, self.sigma)


def load_config(path) -> dict:
    """Read a JSON config; ``toy`` names the bundled one."""
    try:
        if path == BUNDLED:
            return json.loads(resources.files("hiclust").joinpath("data/toy.json").read_text())
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config {path} is not valid JSON: {exc}") from exc


def resolve_config(args) -> tuple[PipelineConfig, dict]:
    """Flags override the config file's ``pipeline`` section, which
    overrides the defaults."""
    raw = load_config(args.config) if getattr(args, "config", None) else {}
    values = dict(raw.get("pipeline", {}))
    names = {f.name for f in fields(PipelineConfig)}
    unknown = set(values) - names
    if unknown:
        raise InvalidInputError(f"unknown pipeline keys in config: {sorted(unknown)}")
    for name in names:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return PipelineConfig(**values), raw


def _synthetic(raw: dict, seed) -> SyntheticSpec:
    if "blobs" not in raw:
        raise InvalidInputError("config has no synthetic data section ('blobs')")
    cfg = dict(raw)
    if seed is not None:
        cfg["seed"] = seed
    try:
        return SyntheticSpec.from_dict(cfg)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed synthetic spec: {exc}") from exc


def _out(args, name) -> str:
    return os.path.join(args.out_dir, name)


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")


# ---------------------------------------------------------------- commands

def cmd_gen(args, out: hio.AtomicOutputs):
    cfg, raw = resolve_config(args)
    spec = _synthetic(raw or load_config(BUNDLED), cfg.seed)
    pts_path = out.path(_out(args, "points.bin" if args.binary else "points.csv"))
    truth_path = out.path(_out(args, "truth.txt"))
    points, truth = generate_toy(spec)
    if args.binary:
        hio.write_points_binary(pts_path, points)
    else:
        hio.write_points_text(pts_path, points)
    hio.write_labels(truth_path, truth)
    log.info("generated %d points in %d dimensions (seed %d)", points.n, points.d, spec.seed)


def cmd_graph(args, out):
    cfg, _ = resolve_config(args)
    path = out.path(_out(args, "graph.txt"))
    points = hio.read_points(args.points)
    graph = build_knn_digraph(points, cfg.k, cfg.make_measure())
    hio.write_edge_list(path, graph)


def cmd_degrees(args, out):
    cfg, _ = resolve_config(args)
    path = out.path(_out(args, "trajectory.csv"))
    graph = hio.read_edge_list(args.graph)
    hio.write_trajectory(path, iter_degrees(graph, cfg.tmax))


def cmd_hi(args, out):
    table, figure = out.path(_out(args, "hi_table.csv")), out.path(_out(args, "hi_figure.svg"))
    graph = hio.read_edge_list(args.graph)
    labels = _labels_for(args.labels, graph.n)
    profile = hi_profile(propagate(graph, args.t))
    emit_hi_figure(profile, labels, table, figure)


def cmd_cores(args, out):
    cfg, _ = resolve_config(args)
    path = out.path(_out(args, "cores.json"))
    graph = hio.read_edge_list(args.graph)
    stage = find_cores(graph, cfg.tmax, cfg.jump_threshold)
    record = stage.to_dict()
    record["tmax"] = cfg.tmax
    _write_json(path, record)


def cmd_cluster(args, out):
    cfg, raw = resolve_config(args)
    names = ["labels.txt", "diagnostics.json", "hi_table.csv", "hi_figure.svg"]
    if args.points is None:
        names += ["points.csv", "truth.txt"]
    paths = {name: out.path(_out(args, name)) for name in names}
    truth = None
    if args.points is not None:
        points = hio.read_points(args.points)
    else:
        if not args.config:
            raise InvalidInputError("give a point file or --config with a synthetic data section")
        points, truth = generate_toy(_synthetic(raw, cfg.seed))
    if args.truth is not None:
        truth = _labels_for(args.truth, points.n)

    graph = hio.read_edge_list(args.graph) if args.graph else None
    if graph is not None and not hasattr(graph, "measure"):
        raise InvalidInputError(f"{args.graph} lacks the measure header needed for merging")
    stage = None
    if args.cores:
        with open(args.cores) as fh:
            stage = CoreStage.from_dict(json.load(fh))
    labels, diag = homophilic_clustering(
        points, k=cfg.k, k_c=cfg.kc, measure=cfg.make_measure(), t_max=cfg.tmax,
        target_c=cfg.clusters, jump_threshold=cfg.jump_threshold, graph=graph,
        link=cfg.link, stage=stage,
    )
    diag.seed = cfg.seed if cfg.seed is not None else raw.get("seed")
    record = diag.to_dict()
    if truth is not None:
        record["nmi"] = nmi(truth, labels)

    hio.write_labels(paths["labels.txt"], labels)
    _write_json(paths["diagnostics.json"], record)
    if graph is None:
        graph = build_knn_digraph(points, cfg.k, cfg.make_measure())
    profile = hi_profile(propagate(graph, diag.t_star))
    emit_hi_figure(profile, labels, paths["hi_table.csv"], paths["hi_figure.svg"])
    if args.points is None:
        hio.write_points_text(paths["points.csv"], points)
        hio.write_labels(paths["truth.txt"], truth)
    if truth is not None:
        print(f"nmi {record['nmi']:.6f}")
    print(f"clusters {diag.n_clusters}  t_star {diag.t_star}  jumps {diag.jumps}")


def cmd_eval(args, out):
    a = hio.read_labels(args.labels_a)
    b = hio.read_labels(args.labels_b)
    print(repr(nmi(a, b, include_noise=args.include_noise)))


def _labels_for(path, n):
    if path is None:
        return None
    labels = hio.read_labels(path)
    if labels.size != n:
        raise InvalidInputError(f"{path} has {labels.size} labels, expected {n}")
    return labels


# ------------------------------------------------------------------ parser

def _pipeline_flags(p, *names):
    if "config" in names:
        p.add_argument("--config", help="JSON config; 'toy' selects the bundled one")
    if "k" in names:
        p.add_argument("--k", type=int, help="neighbours per point (default 10)")
    if "measure" in names:
        p.add_argument("--measure", choices=("gaussian", "cosine"), help="similarity (default gaussian)")
        p.add_argument("--sigma", type=float, help="gaussian bandwidth (default: median kNN distance)")
    if "tmax" in names:
        p.add_argument("--tmax", type=int, help="largest power swept (default 200)")
    if "jump" in names:
        p.add_argument("--jump-threshold", dest="jump_threshold", type=int,
                       help="residual rise that counts as a jump (default max(2, ceil(n/100)))")
    if "merge" in names:
        p.add_argument("--kc", type=int, help="core neighbours for merging, 1..5 (default 5)")
        p.add_argument("--clusters", type=int, help="stop merging at this many clusters")
        p.add_argument("--link", choices=LINK_MODES, help="merge links (default either)")
    if "seed" in names:
        p.add_argument("--seed", type=int, help="seed of the synthetic generator")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiclust", description="Homophilic clustering in heavy noise.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=".", help="directory for output files (default .)")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic data set")
    _pipeline_flags(p, "config", "seed")
    p.add_argument("--binary", action="store_true", help="write points.bin instead of points.csv")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("graph", parents=[common], help="build the kNN digraph")
    p.add_argument("points")
    _pipeline_flags(p, "config", "k", "measure")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("degrees", parents=[common], help="export the dual-degree trajectory")
    p.add_argument("graph")
    _pipeline_flags(p, "config", "tmax")
    p.set_defaults(func=cmd_degrees)

    p = sub.add_parser("hi", parents=[common], help="HI table and figure at one power")
    p.add_argument("graph")
    p.add_argument("--t", type=int, required=True, help="power")
    p.add_argument("--labels", help="label file used to colour the figure")
    p.set_defaults(func=cmd_hi)

    p = sub.add_parser("cores", parents=[common], help="jumps, t_star, cores and boundary")
    p.add_argument("graph")
    _pipeline_flags(p, "config", "tmax", "jump")
    p.set_defaults(func=cmd_cores)

    p = sub.add_parser("cluster", parents=[common], help="run the full pipeline")
    p.add_argument("points", nargs="?", help="point file (omit to generate from --config)")
    _pipeline_flags(p, "config", "k", "measure", "tmax", "jump", "merge", "seed")
    p.add_argument("--graph", help="reuse a graph file from 'graph'")
    p.add_argument("--cores", help="reuse a cores.json from 'cores'")
    p.add_argument("--truth", help="ground-truth labels to score against")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("eval", help="NMI between two label files")
    p.add_argument("labels_a")
    p.add_argument("labels_b")
    p.add_argument("--include-noise", action="store_true", help="score noise (0) as a cluster")
    p.set_defaults(func=cmd_eval, out_dir=None, force=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    log.info("backend: %s", BACKEND)
    try:
        if args.out_dir is not None:
            os.makedirs(args.out_dir, exist_ok=True)
        with hio.AtomicOutputs(force=args.force) as out:
            args.func(args, out)
    except (HiclustError, OSError, ValueError) as exc:
        print(f"hiclust {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
