import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import random_instance
from mdhp.errors import DimensionMismatchError, NumericalError
from mdhp.hawkes import (
    EXP_CLAMP,
    EventSequences,
    MdhpParams,
    gamma_closed_form,
    grad_log_likelihood,
    intensity_at,
    log_likelihood,
    log_likelihood_and_grad,
    log_likelihood_naive,
    log_likelihood_parts,
    pad_and_stack,
    part1_dense,
)


def one_dim(theta, alpha, beta):
    return MdhpParams([[alpha]], [[beta]], [theta])


def lnl(params, ev):
    return log_likelihood(params, pad_and_stack(ev), ev.t_span)


class TestEventSequences:
    def test_sorted_and_frozen(self):
        ev = EventSequences(([0.5, 0.1, 0.3],), 1.0)
        np.testing.assert_array_equal(ev.times[0], [0.1, 0.3, 0.5])
        with pytest.raises(ValueError):
            ev.times[0][0] = 0.2

    def test_ties_broken_within_dimension(self):
        ev = EventSequences(([0.4, 0.4, 0.4], [0.4]), 1.0)
        assert np.all(np.diff(ev.times[0]) > 0)
        assert ev.times[0][0] == 0.4
        assert ev.times[0][1] == np.nextafter(0.4, 1.0)
        # ties across dimensions stay
        assert ev.times[1][0] == 0.4

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            EventSequences(([1.5],), 1.0)
        with pytest.raises(ValueError):
            EventSequences(([-0.1],), 1.0)

    def test_empty_dims_allowed(self):
        ev = EventSequences(([], [0.2]), 1.0)
        assert ev.dims == 2
        np.testing.assert_array_equal(ev.counts, [0, 1])

    def test_needs_a_dimension(self):
        with pytest.raises(ValueError):
            EventSequences((), 1.0)


class TestMdhpParams:
    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            MdhpParams(np.zeros((2, 2)), np.ones((2, 3)), [1.0, 1.0])

    def test_sign_constraints(self):
        with pytest.raises(ValueError):
            MdhpParams([[-0.1]], [[1.0]], [1.0])
        with pytest.raises(ValueError):
            MdhpParams([[0.1]], [[0.0]], [1.0])

    def test_branching_radius_symmetric(self):
        p = MdhpParams.uniform(2, 0.6, 1.5, 0.2)
        assert p.branching_radius() == pytest.approx(2 * 0.6 / 1.5)


class TestIntensity:
    def test_no_past_events(self):
        p = one_dim(0.5, 1.0, 2.0)
        assert intensity_at(p, EventSequences(([],), 1.0), 0, 0.3) == 0.5

    def test_single_past_event(self):
        p = one_dim(0.5, 1.0, 2.0)
        value = intensity_at(p, EventSequences(([0.0],), 1.0), 0, 1.0)
        assert value == pytest.approx(0.6353352832366127, abs=1e-12)

    def test_coincident_event_excluded(self):
        p = MdhpParams.uniform(2, 1.0, 1.0, 0.3)
        ev = EventSequences(([], [0.4]), 1.0)
        assert intensity_at(p, ev, 0, 0.4) == pytest.approx(0.3)

    def test_errors(self):
        p = MdhpParams.uniform(2, 1.0, 1.0, 0.3)
        ev = EventSequences(([], [0.4]), 1.0)
        with pytest.raises(IndexError):
            intensity_at(p, ev, 2, 0.5)
        with pytest.raises(DimensionMismatchError):
            intensity_at(one_dim(1, 1, 1), ev, 0, 0.5)

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
    def test_monotone_event_effect(self, seed, t_new):
        rng = np.random.default_rng(seed)
        params, ev = random_instance(rng, 3, 5)
        params = MdhpParams(params.alpha + 0.05, params.beta, params.theta)
        j = int(rng.integers(3))
        times = list(ev.times)
        times[j] = np.append(times[j], t_new)
        ev2 = EventSequences(tuple(times), 1.0)
        t_later = t_new + (1.0 - t_new) * 0.5
        for i in range(3):
            assert intensity_at(params, ev2, i, t_later) > intensity_at(params, ev, i, t_later)


class TestNaiveLikelihood:
    def test_poisson_two_events(self):
        ev = EventSequences(([0.2, 0.5],), 1.0)
        assert log_likelihood_naive(one_dim(1.0, 0.0, 1.0), ev) == pytest.approx(-1.0, abs=1e-15)

    def test_empty_sequence(self):
        ev = EventSequences(([],), 1.0)
        assert log_likelihood_naive(one_dim(2.0, 0.0, 1.0), ev) == pytest.approx(-2.0, abs=1e-15)

    def test_zero_intensity_is_reported(self):
        ev = EventSequences(([0.5],), 1.0)
        with pytest.raises(NumericalError):
            log_likelihood_naive(one_dim(0.0, 0.0, 1.0), ev)


class TestOptimizedLikelihood:
    def test_poisson_cases_match_oracle(self):
        for theta, times in [(1.0, [0.2, 0.5]), (2.0, [])]:
            p = one_dim(theta, 0.0, 1.0)
            ev = EventSequences((times,), 1.0)
            assert lnl(p, ev) == pytest.approx(log_likelihood_naive(p, ev), abs=1e-15)

    def test_random_instances_match_oracle(self, rng):
        for _ in range(100):
            d = int(rng.integers(1, 5))
            params, ev = random_instance(rng, d, 30, t_span=float(rng.uniform(0.5, 5.0)))
            naive = log_likelihood_naive(params, ev)
            fast = lnl(params, ev)
            assert abs(fast - naive) / max(1.0, abs(naive)) <= 1e-9

    def test_part1_dense_matches(self, rng):
        for _ in range(20):
            params, ev = random_instance(rng, 3, 15)
            pe = pad_and_stack(ev)
            part1, _, _ = log_likelihood_parts(params, pe, ev.t_span)
            assert part1_dense(params, pe) == pytest.approx(part1, rel=1e-12)

    def test_gamma_consistency(self, rng):
        for _ in range(20):
            params, ev = random_instance(rng, 3, 15)
            pe = pad_and_stack(ev)
            part1, _, _ = log_likelihood_parts(params, pe, ev.t_span)
            assert lnl(params, ev) == pytest.approx(part1 - gamma_closed_form(params, ev), rel=1e-12)

    def test_poisson_reduction_exact(self, rng):
        for _ in range(10):
            d = int(rng.integers(1, 4))
            _, ev = random_instance(rng, d, 20, t_span=2.0)
            theta = rng.uniform(0.2, 3.0, d)
            p = MdhpParams(np.zeros((d, d)), np.ones((d, d)), theta)
            expected = sum(n * math.log(th) - 2.0 * th for n, th in zip(ev.counts, theta))
            assert lnl(p, ev) == pytest.approx(expected, rel=1e-13, abs=1e-13)

    def test_padding_slots_contribute_nothing(self):
        ev = EventSequences(([0.1, 0.2, 0.3], [0.5]), 1.0)
        pe = pad_and_stack(ev)
        assert np.all(pe.padded[1, 1:] == 1.0)
        p = MdhpParams.uniform(2, 0.4, 1.3, 0.5)
        _, _, part3 = log_likelihood_parts(p, pe, 1.0)
        # part3 computed from the real events only
        expected = sum(
            0.4 / 1.3 * np.sum(np.exp(-1.3 * (1.0 - ts)) - 1.0) for ts in ev.times for _ in range(2)
        )
        assert part3 == pytest.approx(expected, rel=1e-13)

    def test_all_empty(self):
        ev = EventSequences(([], [], []), 2.0)
        p = MdhpParams.uniform(3, 0.3, 1.0, 0.7)
        assert lnl(p, ev) == pytest.approx(-2.0 * 2.1)

    def test_shape_mismatch(self):
        ev = EventSequences(([0.1], [0.2]), 1.0)
        with pytest.raises(DimensionMismatchError):
            log_likelihood(one_dim(1, 1, 1), pad_and_stack(ev), 1.0)

    def test_nan_propagates(self):
        ev = EventSequences(([0.1, 0.3],), 1.0)
        p = MdhpParams([[np.nan]], [[1.0]], [1.0])
        assert np.isnan(lnl(p, ev))

    def test_clamp_neutral_in_normal_regime(self, rng):
        # with positive beta every exponent argument is <= 0, far below the clamp
        params, ev = random_instance(rng, 3, 20)
        pe = pad_and_stack(ev)
        assert np.all(-params.beta.max() * pe.pair_tau <= EXP_CLAMP)
        assert lnl(params, ev) == pytest.approx(log_likelihood_naive(params, ev), rel=1e-12)


class TestPadAndStack:
    def test_shapes(self):
        ev = EventSequences(([0.1, 0.2, 0.3], [0.4]), 1.0)
        pe = pad_and_stack(ev)
        assert pe.padded.shape == (2, 3)
        assert pe.mask.sum() == 4
        assert pe.tmpt.shape == (2, 3, 2, 3)

    def test_single_dim_pairs(self):
        ev = EventSequences(([0.2, 0.5],), 1.0)
        pe = pad_and_stack(ev)
        assert pe.tmpt[0, 1, 0, 0] == pytest.approx(0.3)
        assert pe.pair_mask[0, 1, 0, 0]
        assert not pe.pair_mask[0, 0, 0, 0]
        assert not pe.pair_mask[0, 1, 0, 1]

    def test_all_empty_mask(self):
        pe = pad_and_stack(EventSequences(([], []), 1.0))
        assert pe.mask.sum() == 0

    @given(st.integers(0, 2**32 - 1))
    def test_invariants(self, seed):
        rng = np.random.default_rng(seed)
        _, ev = random_instance(rng, int(rng.integers(1, 4)), 6)
        pe = pad_and_stack(ev)
        for i, ts in enumerate(ev.times):
            np.testing.assert_array_equal(pe.padded[i, : ts.size], ts)
            assert np.all(pe.padded[i, ts.size:] == ev.t_span)
        diff = pe.padded[:, :, None, None] - pe.padded[None, None, :, :]
        np.testing.assert_array_equal(pe.tmpt, diff)
        assert np.all(pe.tmpt[pe.pair_mask] > 0)
        valid = pe.mask[:, :, None, None] & pe.mask[None, None, :, :]
        np.testing.assert_array_equal(pe.pair_mask, valid & (pe.tmpt > 0))


class TestGamma:
    def test_baseline_only(self):
        ev = EventSequences(([0.1, 0.4], [0.3]), 3.0)
        p = MdhpParams(np.zeros((2, 2)), np.ones((2, 2)), [0.2, 0.5])
        assert gamma_closed_form(p, ev) == pytest.approx(3.0 * 0.7)

    def test_event_at_end_contributes_nothing(self):
        p = one_dim(0.5, 0.8, 1.7)
        with_end = EventSequences(([0.2, 1.0],), 1.0)
        without = EventSequences(([0.2],), 1.0)
        assert gamma_closed_form(p, with_end) == pytest.approx(gamma_closed_form(p, without), rel=1e-15)

    def test_matches_quadrature(self, rng):
        for _ in range(50):
            params, ev = random_instance(rng, 2, 8, t_span=float(rng.uniform(0.5, 3.0)))
            bps = np.sort(np.concatenate(ev.times))
            total = 0.0
            for i in range(2):
                f = lambda v, i=i: intensity_at(params, ev, i, v)
                total += quad(f, 0.0, ev.t_span, points=bps if bps.size else None,
                              limit=500, epsabs=0, epsrel=1e-11)[0]
            assert gamma_closed_form(params, ev) == pytest.approx(total, rel=1e-6)


def central_diff(params, ev, name, idx, h=1e-5):
    pe = pad_and_stack(ev)
    out = []
    for sign in (1, -1):
        arrs = {"alpha": params.alpha.copy(), "beta": params.beta.copy(), "theta": params.theta.copy()}
        arrs[name][idx] += sign * h
        out.append(log_likelihood(MdhpParams(**arrs), pe, ev.t_span))
    return (out[0] - out[1]) / (2 * h)


class TestGradient:
    def test_poisson_score(self):
        ev = EventSequences(([0.1, 0.25, 0.6, 0.9],), 1.0)
        p = one_dim(1.7, 0.0, 1.0)
        _, _, d_theta = grad_log_likelihood(p, pad_and_stack(ev), 1.0)
        assert d_theta[0] == pytest.approx(4 / 1.7 - 1.0, abs=1e-10)

    def test_matches_finite_differences(self, rng):
        for _ in range(50):
            d = int(rng.integers(1, 4))
            params, ev = random_instance(rng, d, 12)
            grads = dict(zip(("alpha", "beta", "theta"), grad_log_likelihood(params, pad_and_stack(ev), 1.0)))
            for name, g in grads.items():
                for idx in np.ndindex(g.shape):
                    fd = central_diff(params, ev, name, idx)
                    assert abs(g[idx] - fd) <= 1e-4 * max(1.0, abs(fd)), (name, idx, g[idx], fd)

    def test_empty_dimension_column(self, rng):
        params, _ = random_instance(rng, 3, 5)
        ev = EventSequences(([0.1, 0.5], [], [0.3, 0.7]), 1.0)
        d_alpha, d_beta, _ = grad_log_likelihood(params, pad_and_stack(ev), 1.0)
        np.testing.assert_array_equal(d_alpha[:, 1], 0.0)
        np.testing.assert_array_equal(d_beta[:, 1], 0.0)

    def test_finite_when_lnl_finite(self, rng):
        params, ev = random_instance(rng, 4, 20)
        lnl_value, *grads = log_likelihood_and_grad(params, pad_and_stack(ev), 1.0)
        assert math.isfinite(lnl_value)
        assert all(np.all(np.isfinite(g)) for g in grads)

    def test_value_matches_log_likelihood(self, rng):
        params, ev = random_instance(rng, 3, 20)
        pe = pad_and_stack(ev)
        assert log_likelihood_and_grad(params, pe, 1.0)[0] == log_likelihood(params, pe, 1.0)
