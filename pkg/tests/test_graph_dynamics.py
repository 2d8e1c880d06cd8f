import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynclique.graph_dynamics import (
    GraphSnapshot,
    SimParams,
    edge_index,
    edge_pairs,
    edge_transition_prob,
    replication_rng,
    sample_edge_states,
    sample_initial,
    sample_trajectory_bridge,
    sample_trajectory_clock,
    snapshot_at,
    transition_matrix,
)

probs = st.floats(0.01, 0.99)
rates = st.floats(0.05, 5.0)
gaps = st.floats(0.0, 10.0)


def within(est, target, se, k=3.0):
    return abs(est - target) <= k * se


class TestSimParams:
    def test_alpha_resolves_p(self):
        sp = SimParams(n=16, lam=1.0, times=(0,), alpha=-0.5)
        assert sp.p == pytest.approx(0.25)
        assert sp.n_edges == 120

    @pytest.mark.parametrize(
        "kw",
        [
            dict(n=0, lam=1.0, times=(0,), p=0.5),
            dict(n=5, lam=1.0, times=(0,), p=0.5, alpha=-0.5),
            dict(n=5, lam=1.0, times=(0,)),
            dict(n=5, lam=0.0, times=(0,), p=0.5),
            dict(n=5, lam=1.0, times=(0,), p=1.0),
            dict(n=5, lam=1.0, times=(1.0, 0.5), p=0.5),
            dict(n=5, lam=1.0, times=(), p=0.5),
            dict(n=5, lam=1.0, times=(0,), p=0.5, replications=0),
            dict(n=5, lam=1.0, times=(0,), alpha=0.5),
        ],
    )
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            SimParams(**kw)


@given(st.integers(2, 40), st.data())
def test_edge_index_matches_pair_order(n, data):
    pairs = edge_pairs(n)
    i = data.draw(st.integers(0, len(pairs) - 1))
    u, v = pairs[i]
    assert edge_index(n, u, v) == i == edge_index(n, v, u)


class TestTransitions:
    def test_zero_gap_is_identity(self):
        assert edge_transition_prob(True, True, 0.0, 0.3, 2.0) == 1.0
        assert np.array_equal(transition_matrix(0.0, 0.3, 2.0), np.eye(2))

    def test_long_gap_is_stationary(self):
        assert edge_transition_prob(True, True, 1e3, 0.3, 1.0) == pytest.approx(0.3, abs=1e-15)

    def test_ln2_example(self):
        assert edge_transition_prob(True, True, math.log(2), 0.5, 1.0) == pytest.approx(0.75, abs=1e-15)

    def test_rejects_negative_gap(self):
        with pytest.raises(ValueError):
            edge_transition_prob(True, True, -1.0, 0.5, 1.0)

    @given(gaps, probs, rates)
    def test_stochastic_and_detailed_balance(self, h, p, lam):
        P = transition_matrix(h, p, lam)
        assert np.all(P >= 0)
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-14)
        assert (1 - p) * P[0, 1] == pytest.approx(p * P[1, 0], abs=1e-14)

    @given(gaps, gaps, probs, rates)
    def test_chapman_kolmogorov(self, h1, h2, p, lam):
        lhs = transition_matrix(h1, p, lam) @ transition_matrix(h2, p, lam)
        assert np.allclose(lhs, transition_matrix(h1 + h2, p, lam), atol=1e-12, rtol=0)


class TestSnapshot:
    def test_normalises_pairs(self):
        g = GraphSnapshot(4, frozenset({(1, 0), (2, 3)}))
        assert g.edges == {(0, 1), (2, 3)}
        assert g.has_edge(1, 0) and not g.has_edge(0, 2)
        assert len(g) == 2

    def test_rejects_bad_edges(self):
        with pytest.raises(ValueError):
            GraphSnapshot(3, frozenset({(0, 0)}))
        with pytest.raises(ValueError):
            GraphSnapshot(3, frozenset({(0, 3)}))

    @given(st.integers(1, 12), st.data())
    def test_mask_round_trip(self, n, data):
        mask = np.array(data.draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2)), dtype=bool)
        g = GraphSnapshot.from_mask(n, mask)
        assert np.array_equal(g.mask(), mask)


class TestSamplers:
    def test_reproducible(self):
        sp = SimParams(n=12, lam=1.3, times=(0, 0.5, 2.0), p=0.4, seed=99)
        a = sample_trajectory_bridge(sp, replication_rng(99, 3)).masks
        b = sample_trajectory_bridge(sp, replication_rng(99, 3)).masks
        c = sample_trajectory_bridge(sp, replication_rng(99, 4)).masks
        assert np.array_equal(a, b) and not np.array_equal(a, c)
        e1 = sample_trajectory_clock(sp, 3.0, replication_rng(1, 0))
        e2 = sample_trajectory_clock(sp, 3.0, replication_rng(1, 0))
        assert np.array_equal(e1.arrival_time, e2.arrival_time)
        assert np.array_equal(e1.arrival_state, e2.arrival_state)

    def test_initial_mean_edge_count(self):
        sp = SimParams(n=4, lam=1.0, times=(0,), p=0.5)
        rng = np.random.default_rng(7)
        counts = np.array([len(sample_initial(sp, rng)) for _ in range(20000)])
        assert within(counts.mean(), 3.0, counts.std(ddof=1) / math.sqrt(counts.size))

    def test_extreme_p(self):
        rng = np.random.default_rng(0)
        assert len(sample_initial(SimParams(n=30, lam=1.0, times=(0,), p=1e-12), rng)) == 0
        assert len(sample_initial(SimParams(n=30, lam=1.0, times=(0,), p=1 - 1e-12), rng)) == 435

    def test_bridge_marginals_and_two_time_law(self):
        p, lam, times = 0.3, 1.5, (0.0, 0.2, 0.7)
        sp = SimParams(n=20, lam=lam, times=times, p=p, seed=5)
        masks = np.stack([sample_trajectory_bridge(sp, replication_rng(5, r)).masks for r in range(400)])
        x = masks.reshape(masks.shape[0], len(times), -1)
        for i in range(len(times)):
            f = x[:, i].mean(axis=1)
            assert within(f.mean(), p, f.std(ddof=1) / math.sqrt(f.size))
        joint = (x[:, 0] & x[:, 2]).mean(axis=1)
        target = p * (p + (1 - p) * math.exp(-lam * 0.7))
        assert within(joint.mean(), target, joint.std(ddof=1) / math.sqrt(joint.size))

    def test_batch_sampler_lag_correlation(self):
        p, lam, h = 0.2, 2.0, 0.4
        x = sample_edge_states(50, p, lam, (0.0, h), 4000, np.random.default_rng(3)).astype(float)
        prod = (x[:, 0] * x[:, 1]).mean(axis=1)
        target = p * (p + (1 - p) * math.exp(-lam * h))
        assert within(prod.mean(), target, prod.std(ddof=1) / math.sqrt(prod.size))

    def test_clock_arrivals_are_poisson(self):
        n, lam, h = 10, 0.8, 1.5
        sp = SimParams(n=n, lam=lam, times=(0.0, h), p=0.5)
        totals = np.array([sample_trajectory_clock(sp, 2 * h, replication_rng(11, r)).count_arrivals(0.0, h) for r in range(2000)])
        mean = 45 * lam * h
        assert within(totals.mean(), mean, math.sqrt(mean / totals.size))
        # Poisson: variance equals mean
        assert totals.var(ddof=1) == pytest.approx(mean, rel=0.15)

    def test_clock_snapshot_rules(self):
        sp = SimParams(n=8, lam=1.0, times=(0.0, 1.0), p=0.5)
        ev = sample_trajectory_clock(sp, None, replication_rng(2, 0))
        assert np.array_equal(snapshot_at(ev, 0.0).mask(), ev.initial)
        untouched = ev.arrivals_per_edge(0.0, 1.0) == 0
        assert np.array_equal(snapshot_at(ev, 1.0).mask()[untouched], ev.initial[untouched])
        for e in np.flatnonzero(~untouched)[:5]:
            t, s = ev.arrivals(e)
            assert snapshot_at(ev, float(t[-1])).mask()[e] == s[-1]
        with pytest.raises(ValueError):
            snapshot_at(ev, 1.5)
        with pytest.raises(ValueError):
            sample_trajectory_clock(sp, 0.5, replication_rng(2, 0))

    def test_clock_matches_bridge_in_law(self):
        p, lam = 0.35, 1.0
        sp = SimParams(n=10, lam=lam, times=(0.0, 0.6), p=p)
        R = 3000
        clock = np.empty((R, 2))
        bridge = np.empty((R, 2))
        for r in range(R):
            ev = sample_trajectory_clock(sp, None, replication_rng(21, r))
            a, b = snapshot_at(ev, 0.0).mask(), snapshot_at(ev, 0.6).mask()
            clock[r] = b.mean(), (a & b).mean()
            m = sample_trajectory_bridge(sp, replication_rng(22, r)).masks
            bridge[r] = m[1].mean(), (m[0] & m[1]).mean()
        for c in range(2):
            se = math.sqrt(clock[:, c].var(ddof=1) / R + bridge[:, c].var(ddof=1) / R)
            assert within(clock[:, c].mean(), bridge[:, c].mean(), se)
        assert within(clock[:, 0].mean(), p, clock[:, 0].std(ddof=1) / math.sqrt(R))
