import numpy as np
import pytest
from scipy import stats

from mdhp.hawkes import MdhpParams
from mdhp.simulate import EventCapExceeded, SimConfig, simulate_mdhp, time_rescaled_gaps


class TestSimConfig:
    def test_invalid(self):
        p = MdhpParams.uniform(1, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            SimConfig(p, 0.0)
        with pytest.raises(ValueError):
            SimConfig(p, 1.0, max_events=0)


class TestPoissonLimit:
    def test_counts_within_four_sigma(self):
        # alpha = 0 is a homogeneous Poisson process with rate theta
        p = MdhpParams(np.zeros((2, 2)), np.ones((2, 2)), np.array([3.0, 7.0]))
        counts = np.array(
            [[t.size for t in simulate_mdhp(SimConfig(p, 10.0, seed=s)).times] for s in range(50)]
        )
        mean = counts.mean(axis=0)
        sigma = np.sqrt(np.array([30.0, 70.0]) / 50)
        assert np.all(np.abs(mean - [30.0, 70.0]) < 4 * sigma)

    def test_zero_intensity_is_empty(self):
        p = MdhpParams(np.full((2, 2), 0.3), np.ones((2, 2)), np.zeros(2))
        ev = simulate_mdhp(SimConfig(p, 100.0))
        assert all(t.size == 0 for t in ev.times)


class TestExcitation:
    def test_stationary_rate(self):
        p = MdhpParams.uniform(2, 0.3, 1.5, 0.5)
        ev = simulate_mdhp(SimConfig(p, 4000.0, seed=11))
        expected = np.linalg.solve(np.eye(2) - p.alpha / p.beta, p.theta)
        np.testing.assert_allclose(ev.counts / 4000.0, expected, rtol=0.15)

    def test_rescaled_gaps_are_unit_exponential(self):
        p = MdhpParams(
            np.array([[0.4, 0.2], [0.1, 0.3]]),
            np.array([[2.0, 1.0], [1.5, 2.5]]),
            np.array([0.6, 0.4]),
        )
        ev = simulate_mdhp(SimConfig(p, 1500.0, seed=2))
        gaps = time_rescaled_gaps(p, ev)
        assert stats.kstest(gaps, "expon").pvalue > 1e-3

    def test_unstable_warns(self):
        p = MdhpParams.uniform(1, 2.0, 1.0, 1.0)
        with pytest.warns(RuntimeWarning), pytest.raises(EventCapExceeded):
            simulate_mdhp(SimConfig(p, 100.0, max_events=500))


class TestOutput:
    def test_deterministic_for_seed(self):
        p = MdhpParams.uniform(3, 0.2, 1.0, 1.0)
        a = simulate_mdhp(SimConfig(p, 20.0, seed=7))
        b = simulate_mdhp(SimConfig(p, 20.0, seed=7))
        c = simulate_mdhp(SimConfig(p, 20.0, seed=8))
        for x, y in zip(a.times, b.times):
            np.testing.assert_array_equal(x, y)
        assert any(x.size != y.size or np.any(x != y) for x, y in zip(a.times, c.times))

    @pytest.mark.parametrize("seed", range(5))
    def test_sorted_and_in_bounds(self, seed):
        p = MdhpParams.uniform(3, 0.25, 2.0, 2.0)
        ev = simulate_mdhp(SimConfig(p, 15.0, seed=seed))
        for t in ev.times:
            assert np.all(np.diff(t) > 0)
            assert np.all((t >= 0) & (t <= 15.0))

    def test_cap(self):
        p = MdhpParams.uniform(1, 0.0, 1.0, 100.0)
        with pytest.raises(EventCapExceeded):
            simulate_mdhp(SimConfig(p, 10.0, max_events=10))
