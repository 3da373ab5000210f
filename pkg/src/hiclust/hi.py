"""The homophilic in-degree (HI) figure and everything read off it.

Given dual degrees of order t, the HI figure sorts out-degrees in
descending order and carries the in-degrees along.  Points whose in-degree
sits on or above the out-degree curve (``hbar >= 1``) are cluster cores.
Sweeping t, the residual distance (gap between the right edge of the figure
and the rightmost core) jumps whenever a weak density layer sinks below the
curve; the first jump marks the end of the noise layer and the stretch up to
the second jump is where an optimal power is searched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidStateError, SelectionError, UndefinedMetricError
from .propagation import DegreeTrajectory, DualDegreeState, iter_degrees

__all__ = [
    "HiProfile",
    "CoreSelection",
    "Sweep",
    "hi_profile",
    "homophilic_coefficients",
    "extract_cores",
    "residual_distance",
    "default_jump_threshold",
    "detect_jump_transitions",
    "geometric_mean_truncated",
    "select_optimal_t",
    "select_from_curve",
    "noise_boundary",
    "sweep",
    "layer_means",
]


@dataclass(frozen=True, eq=False)
class HiProfile:
    sorted_out: np.ndarray
    permuted_in: np.ndarray
    perm: np.ndarray
    t: int | None = None

    @property
    def n(self) -> int:
        return len(self.perm)


def hi_profile(state: DualDegreeState) -> HiProfile:
    """Sort out-degrees descending (ties by ascending node id) and carry the
    in-degrees through the same permutation."""
    perm = np.argsort(-state.d_out, kind="stable")
    return HiProfile(state.d_out[perm], state.d_in[perm], perm, state.t)


def homophilic_coefficients(state: DualDegreeState) -> np.ndarray:
    """``d_in / d_out`` per node."""
    if np.any(state.d_out <= 0):
        raise InvalidStateError("out-degrees must be strictly positive")
    return state.d_in / state.d_out


def extract_cores(hbar) -> np.ndarray:
    """Ids with ``hbar >= 1``, ascending.  May be empty."""
    return np.flatnonzero(np.asarray(hbar) >= 1.0)


def residual_distance(profile: HiProfile, hbar) -> int:
    """Rank gap from the right edge of the HI figure to the rightmost core.

    Returns ``n`` when no point lies on or above the out-degree curve.
    """
    above = np.flatnonzero(np.asarray(hbar)[profile.perm] >= 1.0)
    if above.size == 0:
        return profile.n
    return int(profile.n - 1 - above[-1])


def default_jump_threshold(n: int) -> int:
    return max(2, math.ceil(0.01 * n))


def detect_jump_transitions(ts, r, n: int | None = None, threshold: int | None = None) -> list[int]:
    """Powers at which the residual distance jumps.

    A step with ``r[t] - r[t-1] >= threshold`` qualifies; a run of
    consecutive qualifying steps is one transition, reported at its first
    power.  ``ts`` must be contiguous.
    """
    ts = [int(t) for t in ts]
    r = np.asarray(r, dtype=np.int64)
    if len(ts) != len(r):
        raise InvalidInputError("ts and r differ in length")
    if len(ts) < 2:
        return []
    if any(b - a != 1 for a, b in zip(ts, ts[1:])):
        raise InvalidInputError("residual trajectory must cover contiguous powers")
    if threshold is None:
        if n is None:
            raise InvalidInputError("either n or threshold is required")
        threshold = default_jump_threshold(n)
    rises = np.diff(r) >= threshold
    jumps = []
    for i, hit in enumerate(rises):
        if hit and not (i > 0 and rises[i - 1]):
            jumps.append(ts[i + 1])
    return jumps


def geometric_mean_truncated(state: DualDegreeState, hbar) -> float:
    """Geometric mean of the in-degrees of the cores, computed in log space."""
    cores = extract_cores(hbar)
    if cores.size == 0:
        raise UndefinedMetricError(f"no cores at t={state.t}: geometric mean undefined")
    return float(np.exp(np.mean(np.log(state.d_in[cores]))))


def select_from_curve(ts, g, jumps, t_max: int | None = None) -> tuple[int, tuple[int, int]]:
    """Pick the first local maximum of ``g`` inside the feasible interval.

    The interval is ``[first jump, second jump)``, or ``[first jump, t_max]``
    with a single jump.  Endpoints count as maxima when they beat their one
    neighbour; plateaus count.  ``g`` entries that are ``nan`` (no cores)
    never qualify.  Returns ``(t_star, (lo, hi))`` with ``hi`` inclusive.
    """
    if not jumps:
        raise SelectionError("no jump transition detected; increase t_max")
    ts = [int(t) for t in ts]
    g = np.asarray(g, dtype=np.float64)
    lo = int(jumps[0])
    hi = int(jumps[1]) - 1 if len(jumps) > 1 else (ts[-1] if t_max is None else int(t_max))
    idx = [i for i, t in enumerate(ts) if lo <= t <= hi]
    if not idx:
        raise SelectionError(f"feasible interval [{lo}, {hi}] not covered by the curve")
    vals = g[idx]
    for p, i in enumerate(idx):
        v = vals[p]
        if np.isnan(v):
            continue
        left = vals[p - 1] if p > 0 else -np.inf
        right = vals[p + 1] if p + 1 < len(vals) else -np.inf
        if (np.isnan(left) or v >= left) and (np.isnan(right) or v >= right):
            return ts[i], (lo, hi)
    raise SelectionError(f"no cores anywhere in the feasible interval [{lo}, {hi}]")


@dataclass(frozen=True, eq=False)
class CoreSelection:
    t_star: int
    core_ids: np.ndarray
    g_curve: list
    interval: tuple[int, int] = (0, 0)


def select_optimal_t(traj: DegreeTrajectory, jumps, t_max: int | None = None) -> CoreSelection:
    """Choose the power whose cores have a locally maximal in-degree
    geometric mean, between the first and second jump transitions."""
    if not jumps:
        raise SelectionError("no jump transition detected; increase t_max")
    ts, g = [], []
    for state in traj:
        hbar = homophilic_coefficients(state)
        ts.append(state.t)
        g.append(geometric_mean_truncated(state, hbar) if np.any(hbar >= 1) else np.nan)
    t_star, interval = select_from_curve(ts, g, jumps, t_max if t_max is not None else ts[-1])
    lo, hi = interval
    curve = [(t, v) for t, v in zip(ts, g) if lo <= t <= hi]
    cores = extract_cores(homophilic_coefficients(traj.at(t_star)))
    return CoreSelection(t_star, cores, curve, interval)


def noise_boundary(eta, c_max_ids) -> np.ndarray:
    """Points whose local density reaches the sparsest member of ``c_max_ids``.

    The complement is the noise set.
    """
    eta = np.asarray(eta, dtype=np.float64)
    c_max_ids = np.asarray(c_max_ids, dtype=np.int64)
    if c_max_ids.size == 0:
        raise InvalidInputError("the largest-core set is empty")
    threshold = eta[c_max_ids].min()
    return np.flatnonzero(eta >= threshold)


@dataclass(frozen=True, eq=False)
class Sweep:
    """Per-power statistics of a t sweep, computed without storing states."""

    ts: list
    residual: list
    g: list
    n_cores: list
    jumps: list = field(default_factory=list)
    n: int = 0
    threshold: int = 0
    # first power that underflowed, when the sweep had to stop early
    truncated_at: int | None = None


def sweep(graph, t_max: int, threshold: int | None = None) -> Sweep:
    """Residual distance, core count and g for ``t = 1..t_max``; detects jumps.

    If the degrees underflow before ``t_max`` the sweep stops at the last
    representable power and records the failing one in ``truncated_at``.
    """
    if t_max < 1:
        raise InvalidInputError(f"t_max must be >= 1, got {t_max}")
    n = graph.n
    threshold = default_jump_threshold(n) if threshold is None else int(threshold)
    if threshold < 1:
        raise InvalidInputError("jump threshold must be >= 1")
    ts, res, g, nc = [], [], [], []
    truncated = None
    states = iter_degrees(graph, t_max)
    while True:
        try:
            state = next(states)
        except StopIteration:
            break
        except InvalidStateError:
            truncated = len(ts) + 1
            if not ts:
                raise
            break
        hbar = homophilic_coefficients(state)
        profile = hi_profile(state)
        cores = hbar >= 1.0
        ts.append(state.t)
        res.append(residual_distance(profile, hbar))
        nc.append(int(cores.sum()))
        g.append(float(np.exp(np.mean(np.log(state.d_in[cores])))) if cores.any() else float("nan"))
    jumps = detect_jump_transitions(ts, res, threshold=threshold)
    return Sweep(ts, res, g, nc, jumps, n, threshold, truncated)


def layer_means(profile: HiProfile, labels) -> dict:
    """Mean permuted in-degree per label (labels indexed by node id)."""
    labels = np.asarray(labels)[profile.perm]
    return {int(c): float(profile.permuted_in[labels == c].mean()) for c in np.unique(labels)}
