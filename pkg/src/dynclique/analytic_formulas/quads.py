"""Four-set intersection types and the increment cross moment.

A *quad* is a 4-tuple of vertex sets (A1, A2, A3, A4) with |A1| = |A2| = i+1
and |A3| = |A4| = j+1.  Its intersection type collects the 15 sizes

    a1..a4, a12, a13, a14, a23, a24, a34, a123, a124, a134, a234, a1234

and determines ``ver`` (distinct vertices) and ``pair`` (distinct potential
edges) by inclusion-exclusion.  For the product of indicator increments

    g(h) = [1_A1(2h) - 1_A1(h)] [1_A2(2h) - 1_A2(h)] [1_A3(h) - 1_A3(0)] [1_A4(h) - 1_A4(0)]

the expectation is p^pair times a signed sum of 16 powers of
tau(h) = p + (1-p) e^{-lam h} and tau(2h).

Quads are enumerated up to vertex relabelling through their Venn region
counts: for every non-empty S ⊆ {1,2,3,4}, the number of vertices lying in
exactly the sets of S.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb, factorial, prod
from typing import Iterator, Sequence

import mpmath

from .moments import PRECISION_BITS, _mpf

__all__ = [
    "QuadIntersection",
    "TAU_KEYS",
    "REGIONS",
    "intersection_type",
    "ver",
    "pair",
    "is_independent_quad",
    "phi",
    "expected_g",
    "expected_g_per_edge",
    "venn_classes",
    "quad_from_regions",
    "labelled_count",
    "quad_classes",
    "VerPairReport",
    "check_ver_pair_bound",
    "xi_cross_moment_exact",
]

_PAIRS = list(itertools.combinations(range(1, 5), 2))
_TRIPLES = list(itertools.combinations(range(1, 5), 3))
TAU_KEYS: tuple[tuple[int, ...], ...] = tuple(
    [(q,) for q in range(1, 5)] + _PAIRS + _TRIPLES + [(1, 2, 3, 4)]
)
REGIONS: tuple[frozenset[int], ...] = tuple(
    frozenset(s) for r in range(1, 5) for s in itertools.combinations(range(1, 5), r)
)


@dataclass(frozen=True)
class QuadIntersection:
    sets: tuple[frozenset[int], frozenset[int], frozenset[int], frozenset[int]]
    tau: tuple[int, ...]

    def a(self, *idx: int) -> int:
        """Size of the intersection of the listed sets (1-based)."""
        return self._lookup[tuple(sorted(idx))]

    @cached_property
    def _lookup(self) -> dict[tuple[int, ...], int]:
        return dict(zip(TAU_KEYS, self.tau))

    @cached_property
    def ver(self) -> int:
        return ver(self)

    @cached_property
    def pair(self) -> int:
        return pair(self)

    @property
    def sizes(self) -> tuple[int, int, int, int]:
        return self.tau[:4]


def intersection_type(A1, A2, A3, A4) -> QuadIntersection:
    sets = tuple(frozenset(A) for A in (A1, A2, A3, A4))
    tau = tuple(len(frozenset.intersection(*(sets[q - 1] for q in key))) for key in TAU_KEYS)
    return QuadIntersection(sets, tau)


def _inclusion_exclusion(q: QuadIntersection, f) -> int:
    total = 0
    for key, size in zip(TAU_KEYS, q.tau):
        total += (-1) ** (len(key) + 1) * f(size)
    return total


def ver(q: QuadIntersection) -> int:
    return _inclusion_exclusion(q, lambda a: a)


def pair(q: QuadIntersection) -> int:
    return _inclusion_exclusion(q, lambda a: comb(a, 2))


def is_independent_quad(q: QuadIntersection) -> bool:
    """True when some set shares at most one vertex with each of the other three."""
    return any(all(q.a(s, r) <= 1 for r in range(1, 5) if r != s) for s in range(1, 5))


def _phi_exponents(q: QuadIntersection) -> list[tuple[int, int, int]]:
    """(sign, power of tau(h), power of tau(2h)) for the 16 terms of the expansion."""
    c = {key: comb(size, 2) for key, size in zip(TAU_KEYS, q.tau)}

    def C(*idx: int) -> int:
        return c[tuple(sorted(idx))]

    cross = C(1, 3) + C(1, 4) + C(2, 3) + C(2, 4) - C(1, 2, 3) - C(1, 2, 4) - C(1, 3, 4) - C(2, 3, 4) + C(1, 2, 3, 4)
    return [
        (+1, cross, 0),
        (+1, cross, 0),
        (+1, 0, cross),
        (+1, 0, 0),
        (+1, C(1, 2) + C(1, 3) + C(2, 4) + C(3, 4) - C(2, 3, 4) - C(1, 2, 3),
         C(1, 4) - C(1, 2, 4) - C(1, 3, 4) + C(1, 2, 3, 4)),
        (+1, C(1, 2) + C(2, 3) + C(1, 4) + C(3, 4) - C(1, 3, 4) - C(1, 2, 3),
         C(2, 4) - C(1, 2, 4) - C(2, 3, 4) + C(1, 2, 3, 4)),
        (+1, C(1, 2) + C(1, 4) + C(2, 3) + C(3, 4) - C(2, 3, 4) - C(1, 2, 4),
         C(1, 3) - C(1, 2, 3) - C(1, 3, 4) + C(1, 2, 3, 4)),
        (+1, C(1, 2) + C(2, 4) + C(1, 3) + C(3, 4) - C(1, 3, 4) - C(1, 2, 4),
         C(2, 3) - C(1, 2, 3) - C(2, 3, 4) + C(1, 2, 3, 4)),
        (-1, C(1, 3) + C(2, 3) + C(3, 4) - C(1, 2, 3),
         C(1, 4) + C(2, 4) - C(1, 2, 4) - C(1, 3, 4) - C(2, 3, 4) + C(1, 2, 3, 4)),
        (-1, C(1, 4) + C(2, 4) + C(3, 4) - C(1, 2, 4),
         C(1, 3) + C(2, 3) - C(1, 2, 3) - C(1, 3, 4) - C(2, 3, 4) + C(1, 2, 3, 4)),
        (-1, C(1, 4) + C(2, 4) + C(3, 4) - C(1, 2, 4) - C(1, 3, 4) - C(2, 3, 4) + C(1, 2, 3, 4), 0),
        (-1, C(1, 3) + C(2, 3) + C(3, 4) - C(1, 2, 3) - C(1, 3, 4) - C(2, 3, 4) + C(1, 2, 3, 4), 0),
        (-1, C(1, 2) + C(1, 3) + C(1, 4) - C(1, 2, 3) - C(1, 2, 4) - C(1, 3, 4) + C(1, 2, 3, 4), 0),
        (-1, C(1, 2) + C(2, 3) + C(2, 4) - C(1, 2, 3) - C(1, 2, 4) - C(2, 3, 4) + C(1, 2, 3, 4), 0),
        (-1, C(1, 2) + C(2, 3) + C(2, 4) - C(2, 3, 4),
         C(1, 3) + C(1, 4) - C(1, 2, 3) - C(1, 2, 4) - C(1, 3, 4) + C(1, 2, 3, 4)),
        (-1, C(1, 2) + C(1, 3) + C(1, 4) - C(1, 3, 4),
         C(2, 3) + C(2, 4) - C(1, 2, 3) - C(1, 2, 4) - C(2, 3, 4) + C(1, 2, 3, 4)),
    ]


def _tau_pair(h, p, lam) -> tuple[mpmath.mpf, mpmath.mpf]:
    P = _mpf(p)
    decay = mpmath.exp(-_mpf(lam) * _mpf(h))
    return P + (1 - P) * decay, P + (1 - P) * decay**2


def phi(h, q: QuadIntersection, p, lam=1.0) -> float:
    """The 16-term signed sum with E[g(h)] = p^pair * phi."""
    if h < 0:
        raise ValueError("h must be non-negative")
    with mpmath.workprec(PRECISION_BITS):
        t1, t2 = _tau_pair(h, p, lam)
        return float(mpmath.fsum(s * t1**e1 * t2**e2 for s, e1, e2 in _phi_exponents(q)))


def expected_g(h, q: QuadIntersection, p, lam=1.0) -> float:
    if h < 0:
        raise ValueError("h must be non-negative")
    with mpmath.workprec(PRECISION_BITS):
        t1, t2 = _tau_pair(h, p, lam)
        total = mpmath.fsum(s * t1**e1 * t2**e2 for s, e1, e2 in _phi_exponents(q))
        return float(_mpf(p) ** q.pair * total)


def expected_g_per_edge(h, sets, p, lam=1.0) -> float:
    """E[g] by direct summation over each edge's states at times 0, h and 2h.

    Expands g into its 16 signed products of clique indicators; each product
    is a probability that a set of edges is on at prescribed times, which
    factorises over edges.  Independent of the intersection-type expansion.
    """
    if h < 0:
        raise ValueError("h must be non-negative")
    with mpmath.workprec(PRECISION_BITS):
        P = _mpf(p)
        d = mpmath.exp(-_mpf(lam) * _mpf(h))
        step = [[1 - P * (1 - d), P * (1 - d)], [(1 - P) * (1 - d), P + (1 - P) * d]]
        start = [1 - P, P]
        edge_sets = [set(itertools.combinations(sorted(A), 2)) for A in sets]
        # (time if the "+" factor is picked, time if "-"), in units of h
        slots = [(2, 1), (2, 1), (1, 0), (1, 0)]
        total = mpmath.mpf(0)
        for picks in itertools.product((0, 1), repeat=4):
            required: dict[tuple[int, int], set[int]] = {}
            for q, pick in enumerate(picks):
                for e in edge_sets[q]:
                    required.setdefault(e, set()).add(slots[q][pick])
            prob = mpmath.mpf(1)
            for times in required.values():
                prob *= mpmath.fsum(
                    start[a] * step[a][b] * step[b][c]
                    for a, b, c in itertools.product((0, 1), repeat=3)
                    if all((a, b, c)[t] for t in times)
                )
            total += (-1) ** sum(picks) * prob
        return float(total)


def venn_classes(sizes: Sequence[int], max_vertices: int | None = None) -> Iterator[dict[frozenset[int], int]]:
    """Every assignment of Venn region counts realising the four set sizes."""
    regions = sorted(REGIONS, key=lambda S: (-len(S), sorted(S)))

    def rec(idx: int, remaining: list[int], used: int, acc: dict):
        if idx == len(regions):
            if not any(remaining):
                yield dict(acc)
            return
        S = regions[idx]
        cap = min(remaining[q - 1] for q in S)
        if max_vertices is not None:
            cap = min(cap, max_vertices - used)
        # singleton regions are forced once larger regions are fixed
        lo = cap if len(S) == 1 else 0
        for m in range(lo, cap + 1):
            for q in S:
                remaining[q - 1] -= m
            if m:
                acc[S] = m
            yield from rec(idx + 1, remaining, used + m, acc)
            acc.pop(S, None)
            for q in S:
                remaining[q - 1] += m

    yield from rec(0, list(sizes), 0, {})


def quad_from_regions(regions: dict[frozenset[int], int]) -> QuadIntersection:
    """Concrete sets on vertices 0, 1, ... with the given Venn region counts."""
    sets: list[set[int]] = [set(), set(), set(), set()]
    v = 0
    for S in sorted(regions, key=lambda S: (len(S), sorted(S))):
        for _ in range(regions[S]):
            for q in S:
                sets[q - 1].add(v)
            v += 1
    return intersection_type(*sets)


def labelled_count(regions: dict[frozenset[int], int], n: int) -> int:
    """Number of quads on [n] with exactly these Venn region counts."""
    used = sum(regions.values())
    if used > n:
        return 0
    return factorial(n) // (factorial(n - used) * prod(factorial(m) for m in regions.values()))


def quad_classes(i: int, j: int, max_vertices: int | None = None):
    """(region counts, representative quad) for every class with sizes (i+1, i+1, j+1, j+1)."""
    for regions in venn_classes((i + 1, i + 1, j + 1, j + 1), max_vertices):
        yield regions, quad_from_regions(regions)


@dataclass(frozen=True)
class VerPairReport:
    i: int
    j: int
    k: int
    alphas: tuple[float, ...]
    checked: int
    excluded_independent: int
    violations: tuple[tuple[tuple[int, ...], float, Fraction], ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _exact(alpha) -> Fraction:
    if isinstance(alpha, (Fraction, int)):
        return Fraction(alpha)
    return Fraction(repr(float(alpha)))


def check_ver_pair_bound(i: int, j: int, k: int, alphas: Sequence[float]) -> VerPairReport:
    """Check ver + alpha*pair <= 4k + alpha*(4 C(k+1,2) - 2) on all non-independent quads.

    Alphas are converted to exact rationals from their decimal representation
    so boundary cases with equality are decided exactly.
    """
    lo, hi = Fraction(-1, k), Fraction(-1, k + 1)
    exact = [_exact(a) for a in alphas]
    for a, e in zip(alphas, exact):
        if not lo < e < hi:
            raise ValueError(f"alpha={a} outside ({lo}, {hi}) for k={k}")
    ground = 2 * (i + 1) + 2 * (j + 1)
    rhs_pairs = 4 * comb(k + 1, 2) - 2
    checked = excluded = 0
    violations = []
    for _, q in quad_classes(i, j, ground):
        if is_independent_quad(q):
            excluded += 1
            continue
        checked += 1
        for a, e in zip(alphas, exact):
            margin = 4 * k + e * rhs_pairs - (q.ver + e * q.pair)
            if margin < 0:
                violations.append((q.tau, a, margin))
    return VerPairReport(i, j, k, tuple(alphas), checked, excluded, tuple(violations))


def xi_cross_moment_exact(n: int, i: int, j: int, h, p, lam=1.0, reverse: bool = False) -> float:
    """E[(f_i(2h) - f_i(h))^2 (f_j(h) - f_j(0))^2] as a sum of E[g] over all quads on [n].

    Classes are weighted by their number of labelled realisations.  With
    ``reverse=True`` each quad (A1, A2, A3, A4) is evaluated as (A3, A4, A1, A2),
    the time-reversed pairing; by reversibility this gives the same value.
    """
    if h < 0:
        raise ValueError("h must be non-negative")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError("clique dimensions out of range")
    with mpmath.workprec(PRECISION_BITS):
        t1, t2 = _tau_pair(h, p, lam)
        P = _mpf(p)
        terms = []
        for regions, q in quad_classes(i, j, n):
            if reverse:
                A1, A2, A3, A4 = q.sets
                q = intersection_type(A3, A4, A1, A2)
            val = mpmath.fsum(s * t1**e1 * t2**e2 for s, e1, e2 in _phi_exponents(q))
            terms.append(labelled_count(regions, n) * P**q.pair * val)
        return float(mpmath.fsum(terms))
