"""t-order dual degrees by iterated sparse products.

``d_out`` is pushed through ``W`` (row products) and ``d_in`` through
``W.T`` (column products), both divided by one shared scalar per step so
that ``sum(d_in) + sum(d_out) == 2``.  ``W**t`` is never formed except by
:func:`dense_power_oracle`, which exists for validation only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidInputError, InvalidStateError

# entries below this fail the step instead of drifting into denormals
UNDERFLOW_FLOOR = 1e-300
ORACLE_CAP = 500


@dataclass(frozen=True, eq=False)
class DualDegreeState:
    """In/out degrees after ``t`` normalised steps.

    ``scale`` is the normaliser applied at the last step and ``log_scale``
    accumulates the logs of all of them, so ``d_out * exp(log_scale)`` is
    ``W**t @ 1``.
    """

    d_in: np.ndarray
    d_out: np.ndarray
    t: int
    log_scale: float = 0.0
    scale: float = 1.0

    @property
    def n(self) -> int:
        return len(self.d_out)

    def hbar(self) -> np.ndarray:
        return self.d_in / self.d_out


def initial_state(n: int) -> DualDegreeState:
    """The all-ones start, normalised: the defined value at ``t = 0``."""
    ones = np.full(n, 1.0 / n)
    return DualDegreeState(ones, ones.copy(), 0, math.log(n), float(n))


def _check_state(graph, state):
    if len(state.d_in) != graph.n or len(state.d_out) != graph.n:
        raise InvalidStateError(
            f"state length {len(state.d_in)}/{len(state.d_out)} does not match graph size {graph.n}"
        )
    if not (np.all(state.d_in > 0) and np.all(state.d_out > 0)):
        raise InvalidStateError("degree vectors must be strictly positive")


def dual_degree_step(graph, state: DualDegreeState, scale: float | None = None) -> DualDegreeState:
    """One iteration: ``d_out <- W d_out / a``, ``d_in <- W.T d_in / a``.

    ``a`` is half the total mass of the two new vectors unless ``scale`` is
    given, in which case that value is used instead (used to run a subgraph
    on the normaliser sequence of a parent graph).
    """
    _check_state(graph, state)
    d_out, d_in = graph.dual_products(state.d_out, state.d_in)
    a = 0.5 * (float(np.sum(d_in)) + float(np.sum(d_out))) if scale is None else float(scale)
    if not (a > 0 and math.isfinite(a)):
        raise InvalidStateError(f"normaliser must be positive and finite, got {a}")
    d_out /= a
    d_in /= a
    lowest = min(d_out.min(), d_in.min())
    if lowest < UNDERFLOW_FLOOR:
        raise InvalidStateError(
            f"degree underflow at t={state.t + 1} (min entry {lowest:.3e}); use a smaller t"
        )
    return DualDegreeState(d_in, d_out, state.t + 1, state.log_scale + math.log(a), a)


def iter_degrees(graph, t_max: int, scales: Sequence[float] | None = None) -> Iterator[DualDegreeState]:
    """Yield the states for ``t = 1 .. t_max``; only the current one is held."""
    if t_max < 0:
        raise InvalidInputError(f"t must be non-negative, got {t_max}")
    if scales is not None and len(scales) < t_max:
        raise InvalidInputError("fewer scales than steps")
    ones = np.ones(graph.n)
    state = DualDegreeState(ones, ones, 0, 0.0)
    for step in range(t_max):
        state = dual_degree_step(graph, state, None if scales is None else scales[step])
        yield state


def propagate(graph, t: int, scales: Sequence[float] | None = None) -> DualDegreeState:
    """Dual degrees of order ``t`` from the all-ones start.

    ``t = 0`` returns :func:`initial_state`.  Extra memory is a handful of
    length-n vectors regardless of ``t``.
    """
    if t == 0:
        return initial_state(graph.n)
    state = None
    for state in iter_degrees(graph, t, scales):
        pass
    if state is None:
        raise InvalidInputError(f"t must be non-negative, got {t}")
    return state


def step_scales(graph, t: int) -> list[float]:
    """The normaliser used at each of the first ``t`` steps on ``graph``."""
    return [state.scale for state in iter_degrees(graph, t)]


@dataclass(frozen=True, eq=False)
class DegreeTrajectory:
    """Snapshots of the dual degrees for increasing ``t``."""

    states: tuple

    def __post_init__(self):
        ts = [s.t for s in self.states]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidInputError("trajectory powers must be strictly increasing")

    @property
    def ts(self) -> list[int]:
        return [s.t for s in self.states]

    def at(self, t: int) -> DualDegreeState:
        for s in self.states:
            if s.t == t:
                return s
        raise KeyError(t)

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)


def propagate_trajectory(graph, t_max: int, keep=None) -> DegreeTrajectory:
    """All states ``t = 1..t_max`` (or only those in ``keep``) in one pass."""
    if t_max < 1:
        raise InvalidInputError(f"t_max must be >= 1, got {t_max}")
    wanted = None if keep is None else set(int(t) for t in keep)
    states = [s for s in iter_degrees(graph, t_max) if wanted is None or s.t in wanted]
    return DegreeTrajectory(tuple(states))


def dense_power_oracle(graph, t: int, cap: int = ORACLE_CAP) -> np.ndarray:
    """Explicit ``W**t`` by repeated dense products.  Validation only."""
    if graph.n > cap:
        raise InvalidInputError(f"dense oracle refused: n={graph.n} exceeds cap {cap}")
    if t < 1:
        raise InvalidInputError(f"t must be >= 1, got {t}")
    W = graph.to_dense()
    P = W.copy()
    for _ in range(t - 1):
        P = P @ W
    return P


def dense_degrees(graph, t: int, cap: int = ORACLE_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Normalised ``((W**t).T @ 1, W**t @ 1)`` from the dense oracle, as ``(d_in, d_out)``."""
    P = dense_power_oracle(graph, t, cap)
    d_in, d_out = P.sum(axis=0), P.sum(axis=1)
    a = 0.5 * (d_in.sum() + d_out.sum())
    return d_in / a, d_out / a
