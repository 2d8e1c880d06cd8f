"""Replicated simulation of clique counts, Euler characteristic and Betti numbers.

Replications are independent and each owns the stream
``replication_rng(seed, r)``.  Work is split into fixed-size chunks of
replications, so outputs are identical for any worker count.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .analytic_formulas import mean_clique_count, var_clique_count
from .clique_complex import clique_complex
from .graph_dynamics import (
    GraphSnapshot,
    SimParams,
    replication_rng,
    sample_trajectory_bridge,
    sample_trajectory_clock,
    snapshot_at,
    transition_matrix,
)
from .homology import betti_numbers

__all__ = [
    "CHUNK",
    "MomentAccumulator",
    "MomentEstimate",
    "bootstrap_variance",
    "ProcessSample",
    "NormalizedSeries",
    "KSResult",
    "IncrementStats",
    "NonMarkovReport",
    "run_experiment",
    "normalize",
    "empirical_covariance",
    "marginal_normality_test",
    "homology_dominance",
    "trajectory_statistics",
    "loglog_slope",
    "time_moments",
    "non_markov_demo",
    "four_cycle_indicator",
]

CHUNK = 64
TARGETS = frozenset({"f", "chi", "beta"})


@dataclass
class MomentAccumulator:
    """Streaming mean/variance with pairwise merge (Chan et al.)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, values: Iterable[float]) -> MomentAccumulator:
        x = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float).ravel()
        if x.size:
            other = MomentAccumulator(x.size, float(x.mean()), float(((x - x.mean()) ** 2).sum()))
            self.merge(other)
        return self

    def merge(self, other: MomentAccumulator) -> MomentAccumulator:
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return self
        total = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / total
        self.m2 += other.m2 + delta * delta * self.count * other.count / total
        self.count = total
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    def estimate(self) -> MomentEstimate:
        return MomentEstimate(self.mean, self.variance, self.count, math.sqrt(self.variance / self.count))


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    variance: float
    count: int
    standard_error: float

    @classmethod
    def from_samples(cls, values) -> MomentEstimate:
        return MomentAccumulator().update(np.asarray(values, dtype=float)).estimate()

    def within(self, target: float, n_se: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.mean - target) <= max(n_se * self.standard_error, floor)


def bootstrap_variance(values, resamples: int = 1000, seed: int = 0) -> MomentEstimate:
    """Sample variance with a bootstrap standard error.

    The returned estimate's ``mean`` is the sample variance and its
    ``standard_error`` is the bootstrap spread of that statistic.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("need at least two values")
    rng = np.random.default_rng(seed)
    boot = np.array([x[rng.integers(0, x.size, x.size)].var(ddof=1) for _ in range(resamples)])
    spread = float(boot.var(ddof=1))
    return MomentEstimate(float(x.var(ddof=1)), spread, x.size, math.sqrt(spread))


@dataclass(frozen=True)
class ProcessSample:
    """Per (replication, time) observables of one experiment.

    ``clique_counts[r, i, j]`` is f_j at ``times[i]`` in replication r;
    ``betti`` is zero-padded to a common length and None when not requested.
    """

    params: SimParams
    k: int
    clique_counts: np.ndarray = field(repr=False)
    euler: np.ndarray = field(repr=False)
    betti: np.ndarray | None = field(repr=False, default=None)

    @property
    def times(self) -> tuple[float, ...]:
        return self.params.times

    @property
    def replications(self) -> int:
        return self.clique_counts.shape[0]

    def f(self, j: int | None = None) -> np.ndarray:
        j = self.k if j is None else j
        if j >= self.clique_counts.shape[2]:
            return np.zeros(self.clique_counts.shape[:2], dtype=np.int64)
        return self.clique_counts[:, :, j]

    def beta(self, j: int | None = None) -> np.ndarray:
        if self.betti is None:
            raise ValueError("Betti numbers were not computed for this sample")
        j = self.k if j is None else j
        if j >= self.betti.shape[2]:
            return np.zeros(self.betti.shape[:2], dtype=np.int64)
        return self.betti[:, :, j]


def _pad_stack(rows: list[list[Sequence[int]]]) -> np.ndarray:
    width = max((len(v) for row in rows for v in row), default=1)
    out = np.zeros((len(rows), len(rows[0]) if rows else 0, width), dtype=np.int64)
    for r, row in enumerate(rows):
        for i, v in enumerate(row):
            out[r, i, : len(v)] = v
    return out


def _snapshots(params: SimParams, r: int, sampler: str) -> list[GraphSnapshot]:
    rng = replication_rng(params.seed, r)
    if sampler == "bridge":
        return list(sample_trajectory_bridge(params, rng).states)
    if sampler == "clock":
        ev = sample_trajectory_clock(params, None, rng)
        return [snapshot_at(ev, t) for t in params.times]
    raise ValueError(f"unknown sampler {sampler!r}")


def _run_chunk(params: SimParams, start: int, stop: int, k: int, with_betti: bool, sampler: str):
    counts, eulers, bettis = [], [], []
    for r in range(start, stop):
        c_row, e_row, b_row = [], [], []
        for g in _snapshots(params, r, sampler):
            cx = clique_complex(g, 2 * k + 2)
            tally = cx.counts
            chi = sum((-1) ** j * c for j, c in enumerate(tally))
            c_row.append(tally)
            e_row.append(chi)
            if with_betti:
                bv = betti_numbers(cx)
                if bv.unreduced_alternating_sum() != chi:
                    raise ArithmeticError(f"Euler-Poincare identity violated in replication {r}")
                b_row.append(bv.betti)
        counts.append(c_row)
        eulers.append(e_row)
        bettis.append(b_row)
    return counts, eulers, bettis


def run_experiment(
    params: SimParams,
    targets: Iterable[str] = ("f", "chi", "beta"),
    k: int = 1,
    workers: int = 1,
    sampler: str = "bridge",
) -> ProcessSample:
    """Simulate ``params.replications`` trajectories and compute their topology.

    ``workers=0`` uses one process per CPU.  Clique counts and the Euler
    characteristic are always recorded; Betti numbers only if ``"beta"`` is
    among ``targets``.
    """
    targets = set(targets)
    if not targets <= TARGETS:
        raise ValueError(f"unknown targets {targets - TARGETS}")
    if k < 1:
        raise ValueError("k must be >= 1")
    with_betti = "beta" in targets
    bounds = [(s, min(s + CHUNK, params.replications)) for s in range(0, params.replications, CHUNK)]
    if workers == 0:
        workers = len(os.sched_getaffinity(0))
    args = [(params, s, e, k, with_betti, sampler) for s, e in bounds]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, *zip(*args)))
    else:
        parts = [_run_chunk(*a) for a in args]

    counts = [row for part in parts for row in part[0]]
    eulers = [row for part in parts for row in part[1]]
    bettis = [row for part in parts for row in part[2]]
    return ProcessSample(
        params,
        k,
        _pad_stack(counts),
        np.asarray(eulers, dtype=np.int64),
        _pad_stack(bettis) if with_betti else None,
    )


@dataclass(frozen=True)
class NormalizedSeries:
    """Centred and scaled values ``(x - center) / scale``, shape (replications, times)."""

    quantity: str
    times: tuple[float, ...]
    values: np.ndarray = field(repr=False)
    center: float
    scale: float
    source: str

    def at(self, t: float) -> np.ndarray:
        return self.values[:, self.times.index(float(t))]


def time_moments(values: np.ndarray) -> list[MomentEstimate]:
    """Cross-replication moments at each grid time."""
    return [MomentEstimate.from_samples(values[:, i]) for i in range(values.shape[1])]


def _pooled(values: np.ndarray) -> MomentAccumulator:
    acc = MomentAccumulator()
    for start in range(0, values.shape[0], CHUNK):
        acc.merge(MomentAccumulator().update(values[start:start + CHUNK].astype(float)))
    return acc


def normalize(sample: ProcessSample, quantity: str, moments: str = "analytic") -> NormalizedSeries:
    """Normalise f_k, chi or beta_k of a sample.

    f_k may use the exact mean and variance (``moments="analytic"``); chi and
    beta_k always use moments pooled over all replications and times, which
    is legitimate because the process is stationary.
    """
    if quantity == "f":
        raw = sample.f().astype(float)
    elif quantity == "chi":
        raw = sample.euler.astype(float)
    elif quantity == "beta":
        raw = sample.beta().astype(float)
    else:
        raise ValueError(f"unknown quantity {quantity!r}")

    if quantity == "f" and moments == "analytic":
        n, p, k = sample.params.n, sample.params.p, sample.k
        center = float(mean_clique_count(n, p, k))
        scale = math.sqrt(float(var_clique_count(n, p, k)))
        source = "analytic"
    elif moments in ("analytic", "empirical"):
        acc = _pooled(raw)
        center, scale = acc.mean, math.sqrt(acc.variance)
        source = "empirical"
    else:
        raise ValueError(f"unknown moments {moments!r}")
    if scale == 0:
        raise ValueError(f"{quantity} has zero variance; cannot normalise")
    return NormalizedSeries(quantity, sample.times, (raw - center) / scale, center, scale, source)


def empirical_covariance(series: NormalizedSeries, t1: float, t2: float) -> MomentEstimate:
    """Mean of x̄(t1) x̄(t2) across replications, with its standard error."""
    return MomentEstimate.from_samples(series.at(t1) * series.at(t2))


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical_value: float
    level: float
    count: int

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical_value


def marginal_normality_test(series: NormalizedSeries, t: float, level: float = 0.01, min_count: int = 500) -> KSResult:
    """Two-sided Kolmogorov-Smirnov distance of x̄(t) from N(0, 1)."""
    x = np.sort(series.at(t))
    if x.size < min_count:
        raise ValueError(f"need at least {min_count} replications, got {x.size}")
    return ks_normal(x, level)


def ks_normal(x, level: float = 0.01) -> KSResult:
    x = np.sort(np.asarray(x, dtype=float))
    m = x.size
    cdf = stats.norm.cdf(x)
    # ties: the empirical CDF jumps once per distinct value
    upper = np.searchsorted(x, x, side="right") / m
    lower = np.searchsorted(x, x, side="left") / m
    d = float(max(np.max(upper - cdf), np.max(cdf - lower)))
    critical = float(stats.kstwobign.ppf(1.0 - level) / math.sqrt(m))
    return KSResult(d, critical, level, m)


def homology_dominance(sample: ProcessSample, k: int | None = None) -> float:
    """Fraction of snapshots with reduced beta_k != 0 and beta_j = 0 for every j != k."""
    k = sample.k if k is None else k
    b = sample.betti
    if b is None:
        raise ValueError("Betti numbers were not computed for this sample")
    if k >= b.shape[2]:
        return 0.0
    others = np.delete(b, k, axis=2)
    return float(np.mean((b[:, :, k] != 0) & np.all(others == 0, axis=2)))


@dataclass(frozen=True)
class IncrementStats:
    h: float
    second_moment: MomentEstimate
    fourth_product: MomentEstimate | None


def trajectory_statistics(series: NormalizedSeries, h: float, t: float = 0.0) -> IncrementStats:
    """E[x̄(t+h) - x̄(t)]^2 and, when t+2h is on the grid, E[(x̄(t+2h)-x̄(t+h))^2 (x̄(t+h)-x̄(t))^2]."""
    if h < 0:
        raise ValueError("h must be non-negative")
    base = series.at(t)
    mid = series.at(t + h)
    second = MomentEstimate.from_samples((mid - base) ** 2)
    fourth = None
    if float(t + 2 * h) in series.times:
        top = series.at(t + 2 * h)
        fourth = MomentEstimate.from_samples((top - mid) ** 2 * (mid - base) ** 2)
    return IncrementStats(h, second, fourth)


def loglog_slope(hs: Sequence[float], values: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(hs), np.log(values), 1)
    return float(slope)


# n = 4 is fixed for the non-Markov demonstration: 6 edges, 64 configurations.
_K4_PAIRS = list(itertools.combinations(range(4), 2))


def four_cycle_indicator() -> np.ndarray:
    """beta_1 of the clique complex of every graph on 4 vertices, indexed by edge bitmask."""
    table = np.zeros(1 << 6, dtype=np.int64)
    for code in range(1 << 6):
        edges = frozenset(e for b, e in enumerate(_K4_PAIRS) if code >> b & 1)
        cx = clique_complex(GraphSnapshot(4, edges))
        table[code] = betti_numbers(cx)[1]
    return table


@dataclass(frozen=True)
class NonMarkovReport:
    p: float
    lam: float
    t: float
    closed_all_off: float
    closed_all_on: float
    exact_all_off: float
    exact_all_on: float
    mc_all_off: MomentEstimate | None
    mc_all_on: MomentEstimate | None

    @property
    def gap(self) -> float:
        return abs(self.closed_all_on - self.closed_all_off)

    @property
    def closed_match_exact(self) -> bool:
        return math.isclose(self.closed_all_off, self.exact_all_off, rel_tol=1e-12, abs_tol=1e-15) and math.isclose(
            self.closed_all_on, self.exact_all_on, rel_tol=1e-12, abs_tol=1e-15
        )

    @property
    def mc_match(self) -> bool:
        if self.mc_all_off is None or self.mc_all_on is None:
            return True
        return self.mc_all_off.within(self.closed_all_off) and self.mc_all_on.within(self.closed_all_on)


def _conditional_exact(start_on: bool, p: float, lam: float, t: float, beta1: np.ndarray) -> float:
    P = transition_matrix(t, p, lam)
    row = P[int(start_on)]
    total = 0.0
    for code in range(1 << 6):
        if beta1[code] == 1:
            total += math.prod(row[code >> b & 1] for b in range(6))
    return total


def non_markov_demo(p: float, lam: float, t: float, replications: int = 0, seed: int = 0) -> NonMarkovReport:
    """P(beta_1 = 1 after time t | all 6 edges off) versus (| all 6 edges on) for n = 4.

    Both starting configurations have beta_1 = 0, yet their futures differ.
    The closed forms are checked against an exact sum over the 64 edge
    configurations and, if ``replications > 0``, against simulation started
    from each configuration.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    L = math.exp(-lam * t)
    closed_off = 3 * p**4 * (1 - L) ** 4 * ((1 - p) + p * L) ** 2
    closed_on = 3 * (p + (1 - p) * L) ** 4 * (1 - p) ** 2 * (1 - L) ** 2
    beta1 = four_cycle_indicator()
    exact_off = _conditional_exact(False, p, lam, t, beta1)
    exact_on = _conditional_exact(True, p, lam, t, beta1)

    mc_off = mc_on = None
    if replications > 0:
        P = transition_matrix(t, p, lam)
        weights = 1 << np.arange(6)
        estimates = []
        for stream, start_on in enumerate((False, True)):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))
            on = rng.random((replications, 6)) < P[int(start_on), 1]
            estimates.append(MomentEstimate.from_samples(beta1[on.astype(np.int64) @ weights] == 1))
        mc_off, mc_on = estimates
    return NonMarkovReport(p, lam, t, closed_off, closed_on, exact_off, exact_on, mc_off, mc_on)
