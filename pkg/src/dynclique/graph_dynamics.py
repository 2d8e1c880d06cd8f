"""Exact sampling of the dynamic Erdős–Rényi graph.

Every edge of the complete graph on ``n`` vertices is an independent two-state
continuous-time Markov chain.  It leaves ``off`` at rate ``lam * p`` and leaves
``on`` at rate ``lam * (1 - p)``, so the stationary on-probability is ``p`` and
the chain relaxes at rate ``lam``.

Two constructions are provided:

* the *bridge* sampler draws each grid snapshot from the previous one using the
  exact transition law over the grid gap;
* the *clock* sampler attaches a rate-``lam`` Poisson clock to every edge and
  resamples the edge from Bernoulli(``p``) at each ring.

Randomness
----------
All streams derive from one 64-bit root seed.  Replication ``r`` owns the
stream ``SeedSequence(seed, spawn_key=(r,))``; inside a replication the edges
are drawn as vectors in the fixed lexicographic edge order returned by
:func:`edge_pairs`.  A replication's trajectory therefore depends only on
``(seed, r, params)``, never on how replications are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "SimParams",
    "GraphSnapshot",
    "EdgeTrajectory",
    "EventTrajectory",
    "edge_pairs",
    "edge_index",
    "replication_rng",
    "edge_transition_prob",
    "transition_matrix",
    "sample_initial",
    "sample_trajectory_bridge",
    "sample_trajectory_clock",
    "snapshot_at",
    "sample_edge_states",
]

SEED_MAX = 2**64 - 1


def _check_rate_params(p: float, lam: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in the open interval (0, 1), got {p!r}")
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam!r}")


@dataclass(frozen=True)
class SimParams:
    """Experiment configuration.

    Exactly one of ``p`` and ``alpha`` is given; with ``alpha`` the edge
    probability resolves to ``n ** alpha``.
    """

    n: int
    lam: float
    times: tuple[float, ...]
    p: float | None = None
    alpha: float | None = None
    replications: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if (self.p is None) == (self.alpha is None):
            raise ValueError("give exactly one of p and alpha")
        if self.alpha is not None:
            if not self.alpha < 0:
                raise ValueError(f"alpha must be negative, got {self.alpha!r}")
            object.__setattr__(self, "p", float(self.n) ** float(self.alpha))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "lam", float(self.lam))
        _check_rate_params(self.p, self.lam)

        times = tuple(float(t) for t in self.times)
        if not times:
            raise ValueError("times must be non-empty")
        if times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must be non-negative and strictly increasing")
        object.__setattr__(self, "times", times)

        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 <= self.seed <= SEED_MAX:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_edges(self) -> int:
        return self.n * (self.n - 1) // 2


def edge_pairs(n: int) -> np.ndarray:
    """All vertex pairs ``(u, v)``, ``u < v``, in lexicographic order, shape (E, 2)."""
    u, v = np.triu_indices(n, 1)
    return np.stack([u, v], axis=1)


def edge_index(n: int, u: int, v: int) -> int:
    """Position of the pair ``{u, v}`` in :func:`edge_pairs` order."""
    if u > v:
        u, v = v, u
    return u * n - u * (u + 1) // 2 + (v - u - 1)


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replication,)))


@dataclass(frozen=True)
class GraphSnapshot:
    """An undirected simple graph on vertices ``0..n-1``."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside vertex range")
            norm.add((u, v) if u < v else (v, u))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_mask(cls, n: int, mask: np.ndarray) -> GraphSnapshot:
        pairs = edge_pairs(n)[np.asarray(mask, dtype=bool)]
        return cls(n, frozenset(map(tuple, pairs.tolist())))

    @classmethod
    def complete(cls, n: int) -> GraphSnapshot:
        return cls.from_mask(n, np.ones(n * (n - 1) // 2, dtype=bool))

    def mask(self) -> np.ndarray:
        out = np.zeros(self.n * (self.n - 1) // 2, dtype=bool)
        for u, v in self.edges:
            out[edge_index(self.n, u, v)] = True
        return out

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.edges

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class EdgeTrajectory:
    """Edge states on a time grid; ``masks[i]`` is the edge mask at ``times[i]``."""

    n: int
    times: tuple[float, ...]
    masks: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        masks = np.array(self.masks, dtype=bool)
        if masks.shape != (len(self.times), self.n * (self.n - 1) // 2):
            raise ValueError("masks must have shape (len(times), n_edges)")
        masks.setflags(write=False)
        object.__setattr__(self, "masks", masks)

    @cached_property
    def states(self) -> tuple[GraphSnapshot, ...]:
        return tuple(GraphSnapshot.from_mask(self.n, m) for m in self.masks)


@dataclass(frozen=True)
class EventTrajectory:
    """Poisson-clock realisation of the edge process on ``[0, horizon]``.

    Arrivals are stored flat, sorted by edge and then by time; ``offsets[e]``
    to ``offsets[e + 1]`` delimits edge ``e``.  ``initial`` holds the state
    each edge takes before its first arrival.
    """

    n: int
    horizon: float
    initial: np.ndarray = field(repr=False)
    arrival_edge: np.ndarray = field(repr=False)
    arrival_time: np.ndarray = field(repr=False)
    arrival_state: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("initial", "arrival_edge", "arrival_time", "arrival_state"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_edges(self) -> int:
        return self.n * (self.n - 1) // 2

    @cached_property
    def offsets(self) -> np.ndarray:
        counts = np.bincount(self.arrival_edge, minlength=self.n_edges)
        return np.concatenate([[0], np.cumsum(counts)])

    def arrivals(self, edge: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.offsets[edge], self.offsets[edge + 1]
        return self.arrival_time[lo:hi], self.arrival_state[lo:hi]

    def arrivals_per_edge(self, start: float = 0.0, stop: float | None = None) -> np.ndarray:
        """Number of arrivals of each edge in ``(start, stop]``."""
        stop = self.horizon if stop is None else stop
        sel = (self.arrival_time > start) & (self.arrival_time <= stop)
        return np.bincount(self.arrival_edge[sel], minlength=self.n_edges)

    def count_arrivals(self, start: float = 0.0, stop: float | None = None) -> int:
        """Total arrivals over all edges in ``(start, stop]``."""
        return int(self.arrivals_per_edge(start, stop).sum())


def edge_transition_prob(from_on: bool, to_on: bool, gap: float, p: float, lam: float) -> float:
    """Probability that an edge in state ``from_on`` is in ``to_on`` after ``gap``."""
    _check_rate_params(p, lam)
    if gap < 0:
        raise ValueError(f"gap must be non-negative, got {gap!r}")
    decay = math.exp(-lam * gap)
    stay_on = p + (1.0 - p) * decay
    stay_off = (1.0 - p) + p * decay
    if from_on:
        return stay_on if to_on else 1.0 - stay_on
    return 1.0 - stay_off if to_on else stay_off


def transition_matrix(gap: float, p: float, lam: float) -> np.ndarray:
    """2x2 transition matrix indexed ``[from, to]`` with 0 = off, 1 = on."""
    return np.array(
        [[edge_transition_prob(a, b, gap, p, lam) for b in (False, True)] for a in (False, True)]
    )


def sample_initial(params: SimParams, rng: np.random.Generator) -> GraphSnapshot:
    return GraphSnapshot.from_mask(params.n, rng.random(params.n_edges) < params.p)


def _step(state: np.ndarray, gap: float, p: float, lam: float, rng: np.random.Generator) -> np.ndarray:
    decay = math.exp(-lam * gap)
    u = rng.random(state.shape)
    return np.where(state, u < p + (1.0 - p) * decay, u < p * (1.0 - decay))


def sample_trajectory_bridge(params: SimParams, rng: np.random.Generator) -> EdgeTrajectory:
    masks = np.empty((len(params.times), params.n_edges), dtype=bool)
    masks[0] = rng.random(params.n_edges) < params.p
    for i in range(1, len(params.times)):
        gap = params.times[i] - params.times[i - 1]
        masks[i] = _step(masks[i - 1], gap, params.p, params.lam, rng)
    return EdgeTrajectory(params.n, params.times, masks)


def sample_trajectory_clock(
    params: SimParams, horizon: float | None, rng: np.random.Generator
) -> EventTrajectory:
    horizon = params.times[-1] if horizon is None else float(horizon)
    if horizon < params.times[-1]:
        raise ValueError("horizon must cover the sample grid")
    n_edges = params.n_edges
    initial = rng.random(n_edges) < params.p
    counts = rng.poisson(params.lam * horizon, size=n_edges)
    edge = np.repeat(np.arange(n_edges), counts)
    # 1 - U lies in (0, 1], so arrivals land in (0, horizon]
    times = horizon * (1.0 - rng.random(edge.size))
    order = np.lexsort((times, edge))
    states = rng.random(edge.size) < params.p
    return EventTrajectory(params.n, horizon, initial, edge[order], times[order], states)


def snapshot_at(ev: EventTrajectory, t: float) -> GraphSnapshot:
    if not 0.0 <= t <= ev.horizon:
        raise ValueError(f"t={t!r} outside [0, {ev.horizon}]")
    seen = ev.arrivals_per_edge(0.0, t)
    mask = ev.initial.copy()
    hit = seen > 0
    mask[hit] = ev.arrival_state[ev.offsets[:-1][hit] + seen[hit] - 1]
    return GraphSnapshot.from_mask(ev.n, mask)


def sample_edge_states(
    n_edges: int,
    p: float,
    lam: float,
    times: tuple[float, ...] | list[float],
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Batch bridge sampler: boolean array (size, len(times), n_edges).

    Same law as :func:`sample_trajectory_bridge` but drawn from a single stream,
    for edge-level Monte-Carlo checks that need many replications.
    """
    _check_rate_params(p, lam)
    out = np.empty((size, len(times), n_edges), dtype=bool)
    out[:, 0] = rng.random((size, n_edges)) < p
    for i in range(1, len(times)):
        out[:, i] = _step(out[:, i - 1], times[i] - times[i - 1], p, lam, rng)
    return out
