"""Clique enumeration and clique counts.

Cliques are listed by ordered extension along a degeneracy ordering: each
clique is grown only through vertices that come later in the ordering, so it
is produced exactly once, from its earliest vertex.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb

from .graph_dynamics import GraphSnapshot

__all__ = [
    "CliqueTally",
    "CliqueComplex",
    "degeneracy_order",
    "enumerate_cliques",
    "clique_complex",
    "clique_tally",
    "flip_edge",
    "delta_tally",
]


@dataclass(frozen=True)
class CliqueTally:
    """``counts[j]`` is the number of (j+1)-cliques; indices past the end read as 0."""

    n: int
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        if self.n > 0 and (not counts or counts[0] != self.n):
            raise ValueError("counts[0] must equal the vertex count")
        for j, c in enumerate(counts):
            if not 0 <= c <= comb(self.n, j + 1):
                raise ValueError(f"impossible count {c} of {j + 1}-cliques on {self.n} vertices")
        object.__setattr__(self, "counts", counts)

    def __getitem__(self, j: int) -> int:
        return self.counts[j] if 0 <= j < len(self.counts) else 0

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def euler(self) -> int:
        return sum((-1) ** j * c for j, c in enumerate(self.counts))


@dataclass(frozen=True)
class CliqueComplex:
    """Clique complex truncated at ``max_dim``.

    ``simplices[j]`` holds the (j+1)-vertex cliques as sorted tuples in
    lexicographic order.  ``complete`` is False when the graph has a clique
    larger than ``max_dim + 1`` vertices, i.e. the truncation dropped faces.
    """

    n: int
    simplices: tuple[tuple[tuple[int, ...], ...], ...]
    max_dim: int | None
    complete: bool

    @property
    def dim(self) -> int:
        return len(self.simplices) - 1

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.simplices)

    def tally(self) -> CliqueTally:
        return CliqueTally(self.n, self.counts)

    @cached_property
    def index(self) -> tuple[dict[tuple[int, ...], int], ...]:
        """Per-dimension map from simplex to its row/column position."""
        return tuple({s: i for i, s in enumerate(level)} for level in self.simplices)


def degeneracy_order(adj: list[set[int]]) -> list[int]:
    """Vertices in smallest-last order (repeatedly remove a min-degree vertex)."""
    n = len(adj)
    degree = [len(a) for a in adj]
    buckets: list[set[int]] = [set() for _ in range(max(degree, default=0) + 1)]
    for v, d in enumerate(degree):
        buckets[d].add(v)
    removed = [False] * n
    order: list[int] = []
    low = 0
    for _ in range(n):
        low = max(low - 1, 0)
        while not buckets[low]:
            low += 1
        v = min(buckets[low])
        buckets[low].remove(v)
        removed[v] = True
        order.append(v)
        for u in adj[v]:
            if not removed[u]:
                buckets[degree[u]].remove(u)
                degree[u] -= 1
                buckets[degree[u]].add(u)
    return order


def _walk_cliques(adj: list[set[int]], max_size: int | None):
    """Yield (clique, has_extension) for every clique up to ``max_size`` vertices."""
    order = degeneracy_order(adj)
    rank = {v: i for i, v in enumerate(order)}
    later = [{u for u in adj[v] if rank[u] > rank[v]} for v in range(len(adj))]

    stack = [((v,), later[v]) for v in reversed(order)]
    while stack:
        clique, cands = stack.pop()
        if max_size is not None and len(clique) == max_size:
            yield clique, bool(cands)
            continue
        yield clique, False
        for u in sorted(cands, key=rank.__getitem__, reverse=True):
            stack.append((clique + (u,), cands & later[u]))


def enumerate_cliques(g: GraphSnapshot, max_dim: int | None = None) -> CliqueComplex:
    """All cliques of ``g`` with at most ``max_dim + 1`` vertices (all if None)."""
    if max_dim is not None and max_dim < 0:
        raise ValueError("max_dim must be >= 0")
    max_size = None if max_dim is None else max_dim + 1
    levels: list[list[tuple[int, ...]]] = [[] for _ in range(1 if g.n else 0)]
    complete = True
    for clique, extends in _walk_cliques(g.adjacency(), max_size):
        size = len(clique)
        while len(levels) < size:
            levels.append([])
        levels[size - 1].append(tuple(sorted(clique)))
        complete = complete and not extends
    simplices = tuple(tuple(sorted(level)) for level in levels)
    return CliqueComplex(g.n, simplices, max_dim, complete)


def clique_complex(g: GraphSnapshot, max_dim: int = 4) -> CliqueComplex:
    """Full clique complex, enumerated at ``max_dim`` and deepened until complete."""
    cx = enumerate_cliques(g, max_dim)
    while not cx.complete:
        max_dim *= 2
        cx = enumerate_cliques(g, max_dim)
    return cx


def clique_tally(g: GraphSnapshot, max_dim: int | None = None) -> CliqueTally:
    counts = [0] * (1 if g.n else 0)
    max_size = None if max_dim is None else max_dim + 1
    for clique, _ in _walk_cliques(g.adjacency(), max_size):
        while len(counts) < len(clique):
            counts.append(0)
        counts[len(clique) - 1] += 1
    if max_dim is not None:
        counts.extend([0] * (max_dim + 1 - len(counts)))
    return CliqueTally(g.n, tuple(counts))


def flip_edge(g: GraphSnapshot, u: int, v: int) -> GraphSnapshot:
    if u == v:
        raise ValueError("cannot flip a self-loop")
    pair = (u, v) if u < v else (v, u)
    return GraphSnapshot(g.n, g.edges ^ {pair})


def delta_tally(g: GraphSnapshot, u: int, v: int, max_dim: int | None = None) -> tuple[int, ...]:
    """Signed change of each clique count caused by ``flip_edge(g, u, v)``.

    The cliques gained (or lost) are exactly ``{u, v} ∪ C`` for C a clique,
    possibly empty, of the common neighbourhood of u and v.
    """
    if u == v:
        raise ValueError("cannot flip a self-loop")
    adj = g.adjacency()
    sign = -1 if v in adj[u] else 1
    common = sorted(adj[u] & adj[v])
    local = {w: i for i, w in enumerate(common)}
    sub = [{local[x] for x in adj[w] if x in local} for w in common]
    max_size = None if max_dim is None else max_dim - 1
    delta = [0, 0]
    if max_dim is None or max_dim >= 1:
        delta[1] = sign
        if max_size is None or max_size > 0:
            for clique, _ in _walk_cliques(sub, max_size):
                j = len(clique) + 1
                while len(delta) <= j:
                    delta.append(0)
                delta[j] += sign
    if max_dim is not None:
        delta = (delta + [0] * (max_dim + 1))[: max_dim + 1]
    return tuple(delta)
