"""Synthetic data in the "clusters of different densities in heavy noise"
regime, and normalised mutual information for scoring labelings."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import InvalidInputError, UndefinedMetricError
from .geometry import PointSet

NOISE = 0


@dataclass(frozen=True)
class Blob:
    """An isotropic Gaussian blob.  Blobs sharing a ``label`` form one cluster.

    A blob with a ``parent`` (index of an earlier blob) is nested in it: its
    ``center`` is an offset from the parent's center and, unless it has its
    own label, it belongs to the parent's cluster.
    """

    center: tuple
    scale: float
    count: int
    label: int | None = None
    parent: int | None = None


@dataclass(frozen=True)
class SyntheticSpec:
    blobs: tuple
    noise_count: int = 0
    noise_low: tuple | None = None
    noise_high: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.blobs:
            raise InvalidInputError("at least one blob is required")
        d = len(self.blobs[0].center)
        for i, b in enumerate(self.blobs):
            if len(b.center) != d:
                raise InvalidInputError("blob centers differ in dimension")
            if b.count < 1 or not b.scale > 0:
                raise InvalidInputError(f"blob needs count >= 1 and scale > 0: {b}")
            if b.parent is not None and not 0 <= b.parent < i:
                raise InvalidInputError(f"blob {i}: parent must index an earlier blob")
        if self.noise_count < 0:
            raise InvalidInputError("noise_count must be >= 0")
        if self.noise_count > 0:
            if self.noise_low is None or self.noise_high is None:
                raise InvalidInputError("noise box bounds are required when noise_count > 0")
            low, high = np.asarray(self.noise_low, float), np.asarray(self.noise_high, float)
            if low.shape != (d,) or high.shape != (d,) or np.any(high <= low):
                raise InvalidInputError("noise box must be a non-degenerate d-dimensional box")
            centers = self.centers()
            if np.any(centers < low) or np.any(centers > high):
                raise InvalidInputError("noise box must contain every blob center")

    @property
    def d(self) -> int:
        return len(self.blobs[0].center)

    def centers(self) -> np.ndarray:
        """Absolute blob centers, with nested offsets resolved."""
        out = np.array([b.center for b in self.blobs], dtype=float)
        for i, b in enumerate(self.blobs):
            if b.parent is not None:
                out[i] += out[b.parent]
        return out

    @classmethod
    def from_dict(cls, cfg: dict) -> "SyntheticSpec":
        blobs = tuple(
            Blob(tuple(b["center"]), float(b["scale"]), int(b["count"]), b.get("label"), b.get("parent"))
            for b in cfg["blobs"]
        )
        noise = cfg.get("noise", {})
        return cls(
            blobs=blobs,
            noise_count=int(noise.get("count", 0)),
            noise_low=tuple(noise["low"]) if "low" in noise else None,
            noise_high=tuple(noise["high"]) if "high" in noise else None,
            seed=int(cfg.get("seed", 0)),
        )

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "blobs": [
                {k: v for k, v in dict(center=list(b.center), scale=b.scale, count=b.count,
                                       label=b.label, parent=b.parent).items() if v is not None}
                for b in self.blobs
            ],
        }
        if self.noise_count:
            out["noise"] = dict(count=self.noise_count, low=list(self.noise_low),
                                high=list(self.noise_high))
        return out


def load_spec(path) -> SyntheticSpec:
    with open(path) as fh:
        try:
            return SyntheticSpec.from_dict(json.load(fh))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed synthetic spec {path}: {exc}") from exc


def toy_spec(seed: int | None = None) -> SyntheticSpec:
    """The bundled five-clusters-in-noise configuration."""
    cfg = json.loads(resources.files("hiclust").joinpath("data/toy.json").read_text())
    if seed is not None:
        cfg["seed"] = seed
    return SyntheticSpec.from_dict(cfg)


def generate_toy(spec: SyntheticSpec) -> tuple[PointSet, np.ndarray]:
    """Sample blobs then uniform box noise; noise is labelled 0.

    Unlabelled blobs get labels 1, 2, ... in order of appearance; unlabelled
    nested blobs join their parent's cluster.
    Deterministic in ``spec.seed``.
    """
    rng = np.random.default_rng(spec.seed)
    centers = spec.centers()
    chunks, labels, assigned = [], [], []
    next_label = 1
    for b, center in zip(spec.blobs, centers):
        label = b.label
        if label is None and b.parent is not None:
            label = assigned[b.parent]
        if label is None:
            label = next_label
        next_label = max(next_label, label + 1)
        assigned.append(label)
        chunks.append(center + b.scale * rng.standard_normal((b.count, spec.d)))
        labels.append(np.full(b.count, label, dtype=np.int64))
    if spec.noise_count:
        chunks.append(rng.uniform(spec.noise_low, spec.noise_high, size=(spec.noise_count, spec.d)))
        labels.append(np.full(spec.noise_count, NOISE, dtype=np.int64))
    return PointSet(np.vstack(chunks)), np.concatenate(labels)


def contingency(a, b) -> np.ndarray:
    """Counts of co-occurring labels; rows follow sorted unique ``a``, columns ``b``."""
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    ia, ib = ia.ravel(), ib.ravel()
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return -math.fsum((p * np.log(p)).tolist())


def nmi(a, b, include_noise: bool = False) -> float:
    """Normalised mutual information ``I(A;B) / sqrt(H(A) H(B))``.

    By default only points that are non-noise (label != 0) in both labelings
    are scored.  Two constant labelings score 1; a constant labeling against
    a non-constant one scores 0.
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise InvalidInputError(f"labelings differ in length: {a.size} vs {b.size}")
    if not include_noise:
        keep = (a != NOISE) & (b != NOISE)
        a, b = a[keep], b[keep]
    if a.size == 0:
        raise UndefinedMetricError("no points left to score")
    table = contingency(a, b)
    h_a = _entropy(table.sum(axis=1))
    h_b = _entropy(table.sum(axis=0))
    if h_a == 0 or h_b == 0:
        return 1.0 if h_a == 0 and h_b == 0 else 0.0
    p = table / table.sum()
    pa = p.sum(axis=1, keepdims=True)
    pb = p.sum(axis=0, keepdims=True)
    nz = p > 0
    # fsum is exactly rounded, so the result does not depend on whether the
    # table is traversed row- or column-wise: nmi(a, b) == nmi(b, a) exactly
    mi = math.fsum((p[nz] * np.log(p[nz] / (pa * pb)[nz])).tolist())
    return float(min(1.0, max(0.0, mi / np.sqrt(h_a * h_b))))
