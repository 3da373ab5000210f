"""File formats.

points (text)    one point per row, comma- or whitespace-separated numbers
points (binary)  little-endian: int64 magic, int64 n, int64 d, then n*d float64
                 in row-major order
edge list        ``src dst weight`` per line, diagonal included; an optional
                 ``# hiclust digraph n=<n> k=<k> measure=<name> [sigma=<s>]``
                 header fixes the node count and the similarity used
labels           ``point_index label`` per line, 0 meaning noise
trajectory       CSV with columns t,node_id,d_in,d_out
HI table         CSV with columns rank,node_id,d_out_sorted,d_in_permuted[,label]

Floats are written with 17 significant digits so that every file
round-trips exactly.
"""

from __future__ import annotations

import csv
import os
import re
import struct

import numpy as np

from .errors import InvalidInputError
from .geometry import Cosine, DirectedKnnGraph, GaussianExponential, PointSet, SparseDigraph
from .hi import HiProfile

POINTS_MAGIC = int.from_bytes(b"HICLPTS1", "little")
_HEADER = struct.Struct("<qqq")
FLOAT_FMT = "%.17g"


def read_points(path) -> PointSet:
    """Read a text or binary point file (binary is detected by its magic)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
    if len(head) == _HEADER.size and _HEADER.unpack(head)[0] == POINTS_MAGIC:
        return _read_points_binary(path)
    try:
        with open(path) as fh:
            sample = fh.read(4096)
        delimiter = "," if "," in sample else None
        data = np.loadtxt(path, delimiter=delimiter, comments="#", ndmin=2, dtype=np.float64)
    except (ValueError, UnicodeDecodeError) as exc:
        raise InvalidInputError(f"cannot parse point file {path}: {exc}") from exc
    return PointSet(data)


def _read_points_binary(path) -> PointSet:
    with open(path, "rb") as fh:
        magic, n, d = _HEADER.unpack(fh.read(_HEADER.size))
        if n < 1 or d < 1:
            raise InvalidInputError(f"bad binary header in {path}: n={n}, d={d}")
        payload = fh.read()
    if len(payload) != 8 * n * d:
        raise InvalidInputError(f"binary point file {path} holds {len(payload)} bytes, expected {8 * n * d}")
    return PointSet(np.frombuffer(payload, dtype="<f8").reshape(n, d).copy())


def write_points_binary(path, points) -> None:
    data = np.ascontiguousarray(points.data if isinstance(points, PointSet) else points, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(POINTS_MAGIC, data.shape[0], data.shape[1]))
        fh.write(data.tobytes())


def write_points_text(path, points) -> None:
    data = points.data if isinstance(points, PointSet) else np.asarray(points)
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",")


def measure_name(measure) -> str:
    return "cosine" if isinstance(measure, Cosine) else "gaussian"


def make_measure(name: str, sigma: float | None = None):
    if name == "cosine":
        if sigma is not None:
            raise InvalidInputError("sigma applies only to the gaussian measure")
        return Cosine()
    if name == "gaussian":
        return GaussianExponential(sigma)
    raise InvalidInputError(f"unknown measure {name!r} (expected gaussian or cosine)")


def write_edge_list(path, graph) -> None:
    src, dst, w = graph.edges()
    header = f"hiclust digraph n={graph.n}"
    k = getattr(graph, "k", None)
    measure = getattr(graph, "measure", None)
    if k:
        header += f" k={k}"
    if measure is not None:
        header += f" measure={measure_name(measure)}"
        if getattr(measure, "sigma", None) is not None:
            header += f" sigma={measure.sigma!r}"
    with open(path, "w") as fh:
        fh.write(f"# {header}\n")
        for s, t, x in zip(src.tolist(), dst.tolist(), w.tolist()):
            fh.write(f"{s} {t} {x!r}\n")


def read_edge_list(path) -> SparseDigraph:
    """Parse an edge list.  A full header yields a :class:`DirectedKnnGraph`."""
    meta = {}
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                meta.update(re.findall(r"\b(n|k|measure|sigma)=(\S+)", line))
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InvalidInputError(f"{path}:{lineno}: expected 'src dst weight'")
            try:
                rows.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise InvalidInputError(f"edge list {path} is empty")
    src, dst, w = (np.array(c) for c in zip(*rows))
    try:
        n = int(meta["n"]) if "n" in meta else int(max(src.max(), dst.max())) + 1
        if "k" in meta and "measure" in meta:
            sigma = float(meta["sigma"]) if "sigma" in meta else None
            measure = make_measure(meta["measure"], sigma)
            return DirectedKnnGraph.from_edges(n, src, dst, w, k=int(meta["k"]), measure=measure)
    except ValueError as exc:
        raise InvalidInputError(f"bad edge list header in {path}: {exc}") from exc
    return SparseDigraph.from_edges(n, src, dst, w)


def write_labels(path, labels) -> None:
    with open(path, "w") as fh:
        for i, lab in enumerate(np.asarray(labels, dtype=np.int64).tolist()):
            fh.write(f"{i} {lab}\n")


def read_labels(path) -> np.ndarray:
    try:
        table = np.loadtxt(path, dtype=np.int64, comments="#", ndmin=2)
    except ValueError as exc:
        raise InvalidInputError(f"cannot parse label file {path}: {exc}") from exc
    if table.shape[1] != 2:
        raise InvalidInputError(f"label file {path} must have two columns")
    idx, lab = table[:, 0], table[:, 1]
    if np.any(np.sort(idx) != np.arange(idx.size)):
        raise InvalidInputError(f"label file {path} must list every index 0..n-1 exactly once")
    if np.any(lab < 0):
        raise InvalidInputError(f"label file {path} contains negative labels")
    out = np.empty(idx.size, dtype=np.int64)
    out[idx] = lab
    return out


def write_trajectory(path, states) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "node_id", "d_in", "d_out"])
        for st in states:
            for i, (a, b) in enumerate(zip(st.d_in.tolist(), st.d_out.tolist())):
                w.writerow([st.t, i, repr(a), repr(b)])


def read_trajectory(path) -> dict:
    """``{t: (d_in, d_out)}`` from a trajectory file."""
    out = {}
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        for row in r:
            out.setdefault(int(row["t"]), []).append(
                (int(row["node_id"]), float(row["d_in"]), float(row["d_out"]))
            )
    res = {}
    for t, rows in out.items():
        rows.sort()
        res[t] = (np.array([r[1] for r in rows]), np.array([r[2] for r in rows]))
    return res


def write_hi_table(path, profile: HiProfile, labels=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["rank", "node_id", "d_out_sorted", "d_in_permuted"]
        if labels is not None:
            head.append("label")
            labels = np.asarray(labels)
        w.writerow(head)
        for r in range(profile.n):
            node = int(profile.perm[r])
            row = [r, node, repr(float(profile.sorted_out[r])), repr(float(profile.permuted_in[r]))]
            if labels is not None:
                row.append(int(labels[node]))
            w.writerow(row)


def read_hi_table(path, t=None) -> tuple[HiProfile, np.ndarray | None]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise InvalidInputError(f"HI table {path} has no rows")
    rows.sort(key=lambda r: int(r["rank"]))
    perm = np.array([int(r["node_id"]) for r in rows], dtype=np.int64)
    out = np.array([float(r["d_out_sorted"]) for r in rows])
    inn = np.array([float(r["d_in_permuted"]) for r in rows])
    labels = None
    if "label" in rows[0]:
        labels = np.empty(len(rows), dtype=np.int64)
        labels[perm] = [int(r["label"]) for r in rows]
    return HiProfile(out, inn, perm, t), labels


class AtomicOutputs:
    """Collect output files under temporary names; publish them all on success.

    On an exception nothing is renamed and every temporary file is removed,
    so a failed command leaves no partial outputs behind.
    """

    def __init__(self, force: bool = False):
        self.force = force
        self._pending = []

    def path(self, final) -> str:
        final = os.fspath(final)
        if os.path.exists(final) and not self.force:
            raise InvalidInputError(f"refusing to overwrite {final} (use --force)")
        tmp = f"{final}.tmp-{os.getpid()}"
        self._pending.append((tmp, final))
        return tmp

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            for tmp, final in self._pending:
                os.replace(tmp, final)
        else:
            for tmp, _ in self._pending:
                if os.path.exists(tmp):
                    os.remove(tmp)
        return False
