"""Rational homology of clique complexes.

Reduced Betti numbers come from boundary-matrix ranks.  Ranks are computed
over two large prime fields and compared; a rank over GF(q) never exceeds the
rational rank and equals it unless q divides a torsion coefficient, so
agreement between two unrelated primes is accepted and any disagreement falls
back to exact fraction-free elimination over the integers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .clique_complex import CliqueComplex, clique_complex
from .graph_dynamics import GraphSnapshot

__all__ = [
    "BoundaryMatrix",
    "BettiVector",
    "DEFAULT_PRIMES",
    "boundary_matrix",
    "rank_over_field",
    "rank_mod_p",
    "rank_rational",
    "random_prime",
    "connected_components",
    "betti_numbers",
    "graph_betti",
]

log = logging.getLogger(__name__)

# two primes just below 2^31
DEFAULT_PRIMES = (2147483647, 2147483629)

Field = Union[str, int]


@dataclass(frozen=True)
class BoundaryMatrix:
    """Sparse boundary map from k-simplices (columns) to (k-1)-simplices (rows)."""

    k: int
    n_rows: int
    n_cols: int
    columns: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self) -> None:
        if len(self.columns) != self.n_cols:
            raise ValueError("column count mismatch")
        for col in self.columns:
            if len(col) != self.k + 1:
                raise ValueError(f"a {self.k}-simplex has {self.k + 1} faces")

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.int64)
        for j, col in enumerate(self.columns):
            for i, s in col:
                out[i, j] = s
        return out


@dataclass(frozen=True)
class BettiVector:
    """Reduced Betti numbers ``betti[j]`` and the Euler characteristic."""

    betti: tuple[int, ...]
    euler: int

    def __getitem__(self, j: int) -> int:
        return self.betti[j] if 0 <= j < len(self.betti) else 0

    def unreduced(self) -> tuple[int, ...]:
        if not self.betti:
            return ()
        return (self.betti[0] + 1,) + self.betti[1:]

    def unreduced_alternating_sum(self) -> int:
        return sum((-1) ** j * b for j, b in enumerate(self.unreduced()))

    def reduced_alternating_sum(self) -> int:
        return sum((-1) ** j * b for j, b in enumerate(self.betti))


def boundary_matrix(cx: CliqueComplex, k: int) -> BoundaryMatrix:
    """Entry (face, simplex) is (-1)^i when the face drops the simplex's i-th vertex."""
    if not 1 <= k <= cx.dim:
        raise ValueError(f"k={k} outside 1..{cx.dim}")
    rows = cx.index[k - 1]
    columns = []
    for simplex in cx.simplices[k]:
        col = [(rows[simplex[:i] + simplex[i + 1:]], -1 if i % 2 else 1) for i in range(k + 1)]
        columns.append(tuple(sorted(col)))
    return BoundaryMatrix(k, len(cx.simplices[k - 1]), len(cx.simplices[k]), tuple(columns))


def _is_prime(q: int) -> bool:
    from sympy import isprime

    return bool(isprime(q))


def random_prime(rng: np.random.Generator, bits: int = 30) -> int:
    """A uniformly drawn prime with exactly ``bits`` bits."""
    from sympy import nextprime

    while True:
        q = int(nextprime(int(rng.integers(2 ** (bits - 1), 2**bits)) - 1))
        if q < 2**bits:
            return q


def _sparse_columns(matrix) -> list[dict[int, int]]:
    if isinstance(matrix, BoundaryMatrix):
        return [dict(col) for col in matrix.columns]
    dense = np.asarray(matrix, dtype=object)
    if dense.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    return [{i: int(x) for i, x in enumerate(dense[:, j]) if x != 0} for j in range(dense.shape[1])]


def rank_mod_p(matrix, q: int) -> int:
    """Rank over GF(q) by column reduction, pivoting on each column's lowest row."""
    pivots: dict[int, dict[int, int]] = {}
    rank = 0
    for raw in _sparse_columns(matrix):
        col = {i: x % q for i, x in raw.items() if x % q}
        while col:
            low = max(col)
            pivot = pivots.get(low)
            if pivot is None:
                inv = pow(col[low], -1, q)
                pivots[low] = {i: x * inv % q for i, x in col.items()}
                rank += 1
                break
            factor = col[low]
            for i, x in pivot.items():
                y = (col.get(i, 0) - factor * x) % q
                if y:
                    col[i] = y
                else:
                    col.pop(i, None)
    return rank


def rank_rational(matrix) -> int:
    """Exact rank over Q by fraction-free (Bareiss) elimination on integers."""
    if isinstance(matrix, BoundaryMatrix):
        rows = matrix.to_dense().tolist()
    else:
        rows = [[int(x) for x in row] for row in np.asarray(matrix, dtype=object)]
    m = [list(r) for r in rows]
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    rank = 0
    prev = 1
    for c in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if m[r][c] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        top = m[rank]
        for r in range(rank + 1, n_rows):
            row = m[r]
            lead = row[c]
            for cc in range(c + 1, n_cols):
                row[cc] = (top[c] * row[cc] - lead * top[cc]) // prev
            row[c] = 0
        prev = top[c]
        rank += 1
        if rank == n_rows:
            break
    return rank


def rank_over_field(matrix, field: Field = "rational") -> int:
    """Rank over Q (``field="rational"``) or over GF(q) for a prime ``q``."""
    if field == "rational":
        return rank_rational(matrix)
    if isinstance(field, bool) or not isinstance(field, (int, np.integer)):
        raise ValueError(f"unknown field {field!r}")
    if not _is_prime(int(field)):
        raise ValueError(f"{field} is not prime")
    return rank_mod_p(matrix, int(field))


def _checked_rank(matrix: BoundaryMatrix, primes: Sequence[int]) -> int:
    ranks = {rank_mod_p(matrix, q) for q in primes}
    if len(ranks) == 1:
        return ranks.pop()
    log.warning("modular ranks %s disagree for k=%d; using exact elimination", ranks, matrix.k)
    return rank_rational(matrix)


def connected_components(n: int, edges) -> int:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    count = n
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            count -= 1
    return count


def betti_numbers(
    cx: CliqueComplex, field: str = "modular", primes: Sequence[int] = DEFAULT_PRIMES
) -> BettiVector:
    """Reduced rational Betti numbers of a complete clique complex.

    ``field="modular"`` uses the dual-prime check; ``field="rational"`` uses
    exact elimination throughout.
    """
    if not cx.complete:
        raise ValueError("complex is truncated; enumerate it with a larger max_dim")
    if cx.n == 0:
        return BettiVector((0,), 0)
    counts = cx.counts
    euler = sum((-1) ** j * c for j, c in enumerate(counts))

    edges = cx.simplices[1] if cx.dim >= 1 else ()
    components = connected_components(cx.n, edges)
    ranks = [0] * (cx.dim + 2)
    if cx.dim >= 1:
        ranks[1] = cx.n - components
    for k in range(2, cx.dim + 1):
        d = boundary_matrix(cx, k)
        if field == "rational":
            ranks[k] = rank_rational(d)
        elif field == "modular":
            ranks[k] = _checked_rank(d, primes)
        else:
            raise ValueError(f"unknown field {field!r}")

    betti = [components - 1]
    betti.extend(counts[k] - ranks[k] - ranks[k + 1] for k in range(1, cx.dim + 1))
    out = BettiVector(tuple(betti), euler)
    if out.unreduced_alternating_sum() != euler:
        raise ArithmeticError(f"Euler-Poincare identity failed: {out}")
    return out


def graph_betti(g: GraphSnapshot, max_dim: int = 4, **kwargs) -> BettiVector:
    return betti_numbers(clique_complex(g, max_dim), **kwargs)
