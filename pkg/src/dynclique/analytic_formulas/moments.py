"""Closed-form moments of clique counts in G(n, p) and their lag covariance.

Functions are generic in the numeric type of ``p``: pass a
:class:`fractions.Fraction` to get exact rational results, a float for
floating point.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb
from numbers import Real

import mpmath

__all__ = [
    "mean_clique_count",
    "var_clique_count",
    "var_clique_count_raw",
    "variance_scale",
    "variance_scale_ratio",
    "var_order_constants",
    "variance_ratio",
    "cov_normalized_clique_counts",
    "covariance_correction",
    "exhaustive_clique_moments",
]

# working precision for expressions with exp(-lam * dt)
PRECISION_BITS = 160


def _check(n: int, p, j: int) -> None:
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    if not 0 <= j <= n - 1:
        raise ValueError(f"need 0 <= j <= n - 1, got j={j}, n={n}")


def mean_clique_count(n: int, p: Real, j: int):
    """E[f_j] = C(n, j+1) p^C(j+1, 2)."""
    _check(n, p, j)
    return comb(n, j + 1) * p ** comb(j + 1, 2)


def var_clique_count(n: int, p: Real, j: int):
    """Var[f_j], summing only over overlaps of at least two shared vertices."""
    _check(n, p, j)
    e = comb(j + 1, 2)
    total = 0 * p
    for i in range(2, j + 2):
        weight = comb(j + 1, i) * comb(n, j + 1) * comb(n - j - 1, j + 1 - i)
        total += weight * (p ** (2 * e - comb(i, 2)) - p ** (2 * e))
    return total


def var_clique_count_raw(n: int, p: Real, j: int):
    """Var[f_j] as E[f_j^2] - E[f_j]^2, with the second moment summed over all overlaps."""
    _check(n, p, j)
    e = comb(j + 1, 2)
    second = 0 * p
    for i in range(0, j + 2):
        second += comb(j + 1, i) * comb(n - j - 1, j + 1 - i) * p ** (2 * e) / p ** comb(i, 2)
    return comb(n, j + 1) * second - comb(n, j + 1) ** 2 * p ** (2 * e)


def variance_scale(n: int, p: Real, k: int):
    """The order n^{2k} p^{2 C(k+1,2) - 1} of Var[f_k] in the critical window."""
    return n ** (2 * k) * p ** (2 * comb(k + 1, 2) - 1)


def variance_scale_ratio(n: int, p: Real, k: int):
    return var_clique_count(n, p, k) / variance_scale(n, p, k)


def var_order_constants(ns, alpha: float, k: int) -> tuple[float, float]:
    """(min, max) of Var[f_k] / n^{2k} p^{2C(k+1,2)-1} over ``ns`` with p = n^alpha."""
    ratios = [float(variance_scale_ratio(n, float(n) ** alpha, k)) for n in ns]
    return min(ratios), max(ratios)


def variance_ratio(n: int, p: Real, j: int, k: int):
    """Var[f_j] / Var[f_k]; vanishes as n grows for j != k in the window of k."""
    return var_clique_count(n, p, j) / var_clique_count(n, p, k)


def _mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def _check_cov(n: int, p, lam, k: int, dt) -> None:
    if not 1 <= k <= n - 2:
        raise ValueError(f"need 1 <= k <= n - 2, got k={k}, n={n}")
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if dt < 0:
        raise ValueError("dt must be non-negative")


def cov_normalized_clique_counts(n: int, p, lam, k: int, dt) -> float:
    """Exact Cov[f̄_k(t), f̄_k(t + dt)] at finite n.

    Ratio of two overlap sums: numerator terms (1 + (1-p)/p L)^C(i,2) - 1,
    denominator terms p^-C(i,2) - 1, with L = exp(-lam dt) and i >= 2 the
    number of shared vertices.  Evaluated in 160-bit precision.
    """
    _check_cov(n, p, lam, k, dt)
    with mpmath.workprec(PRECISION_BITS):
        P = _mpf(p)
        L = mpmath.exp(-_mpf(lam) * _mpf(dt))
        x = (1 - P) / P * L
        num = mpmath.mpf(0)
        den = mpmath.mpf(0)
        for i in range(2, k + 2):
            w = comb(k + 1, i) * comb(n - k - 1, k + 1 - i)
            m = comb(i, 2)
            num += w * ((1 + x) ** m - 1)
            den += w * (P ** (-m) - 1)
        return float(num / den)


def covariance_correction(n: int, p, lam, k: int, dt) -> float:
    """The relative correction Z with Cov[f̄_k(t), f̄_k(t+dt)] = L (1 + Z).

    Built from the binomial expansion of each overlap term after the common
    factor (1-p)/p is cancelled: numerator weights C(C(i,2), j) ((1-p) L / p)^{j-1},
    denominator weights p^{-(j-1)}.  Z is identically zero for k = 1.
    """
    _check_cov(n, p, lam, k, dt)
    with mpmath.workprec(PRECISION_BITS):
        P = _mpf(p)
        L = mpmath.exp(-_mpf(lam) * _mpf(dt))
        num = mpmath.mpf(0)
        den = mpmath.mpf(0)
        for i in range(2, k + 2):
            w = comb(k + 1, i) * comb(n - k - 1, k + 1 - i)
            m = comb(i, 2)
            for j in range(1, m + 1):
                num += w * (comb(m, j) * ((1 - P) * L) ** (j - 1) - 1) / P ** (j - 1)
                den += w / P ** (j - 1)
        # the i = 2 term of the numerator is c_21 - 1 = 0
        return float(num / den)


def exhaustive_clique_moments(n: int, p: Real, max_j: int | None = None):
    """Exact (mean, variance) of each f_j by enumerating all 2^C(n,2) graphs.

    Cliques are found by testing every vertex subset directly, independently of
    :mod:`dynclique.clique_complex`.  Returns a list indexed by j.
    """
    max_j = n - 1 if max_j is None else max_j
    pairs = list(itertools.combinations(range(n), 2))
    pos = {e: i for i, e in enumerate(pairs)}
    subsets = [
        [[pos[e] for e in itertools.combinations(s, 2)] for s in itertools.combinations(range(n), j + 1)]
        for j in range(max_j + 1)
    ]
    q = 1 - p
    first = [0 * p] * (max_j + 1)
    second = [0 * p] * (max_j + 1)
    for bits in range(1 << len(pairs)):
        on = [(bits >> i) & 1 for i in range(len(pairs))]
        m = sum(on)
        weight = p**m * q ** (len(pairs) - m)
        for j, family in enumerate(subsets):
            f = sum(all(on[e] for e in edges) for edges in family)
            first[j] += weight * f
            second[j] += weight * f * f
    return [(first[j], second[j] - first[j] ** 2) for j in range(max_j + 1)]
