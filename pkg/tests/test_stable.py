import math

import numpy as np
import pytest
from scipy import stats

from frackac.errors import DomainError
from frackac.stable import (
    RngStream,
    draw_one_sided_stable,
    exit_time_samples,
    sample_one_sided_stable,
    subordinator_increments,
    subordinator_path,
)


class TestRngStream:
    def test_same_indices_reproduce(self):
        a = RngStream(7, 3).generator.random(16)
        b = RngStream(7, 3).generator.random(16)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(7, 3).generator.random(16)
        b = RngStream(7, 4).generator.random(16)
        c = RngStream(8, 3).generator.random(16)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_open_uniform_excludes_zero(self):
        u = RngStream(0, 0).open_uniform(100_000)
        assert u.min() > 0.0
        assert u.max() <= 1.0

    def test_negative_index_rejected(self):
        with pytest.raises(DomainError):
            RngStream(0, -1)
        with pytest.raises(DomainError):
            RngStream(0, 0, channel=-1)

    def test_trajectory_key_is_bare_index(self):
        assert RngStream(7, 3).spawn_key == (3,)
        assert RngStream.for_evaluation(7).spawn_key == (1, 0)

    def test_evaluation_stream_is_separate(self):
        evaluation = RngStream.for_evaluation(7).generator.random(16)
        for index in range(4):
            assert not np.array_equal(evaluation, RngStream(7, index).generator.random(16))
        np.testing.assert_array_equal(evaluation, RngStream.for_evaluation(7).generator.random(16))


class TestOneSidedStable:
    @pytest.mark.parametrize("beta", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_laplace_transform(self, beta):
        eta = draw_one_sided_stable(beta, RngStream(11, int(beta * 10)), 100_000)
        for k in (0.5, 1.0, 2.0):
            sample = np.exp(-k * eta)
            se = sample.std(ddof=1) / math.sqrt(sample.size)
            assert abs(sample.mean() - math.exp(-(k**beta))) < 4.0 * se + 1e-12

    def test_half_order_is_levy(self):
        # Laplace transform exp(-sqrt(k)) is the Levy law with scale 1/2
        eta = draw_one_sided_stable(0.5, RngStream(5, 0), 100_000)
        assert np.median(eta) == pytest.approx(1.0991, abs=0.04)
        assert stats.kstest(eta, stats.levy(scale=0.5).cdf).statistic < 0.01

    def test_near_one_concentrates_at_one(self):
        eta = draw_one_sided_stable(0.99, RngStream(5, 1), 20_000)
        assert np.median(eta) == pytest.approx(1.0, abs=0.1)

    def test_positive_and_finite(self):
        eta = draw_one_sided_stable(0.6, RngStream(2, 0), 50_000)
        assert np.all(eta > 0)
        assert np.all(np.isfinite(eta))

    def test_single_draw_is_first_of_batch(self):
        single = sample_one_sided_stable(0.6, RngStream(4, 9))
        batch = draw_one_sided_stable(0.6, RngStream(4, 9), 1)
        assert single == batch[0]

    @pytest.mark.parametrize("beta", [0.0, 1.0, 1.2])
    def test_order_outside_open_interval(self, beta):
        with pytest.raises(DomainError):
            draw_one_sided_stable(beta, RngStream(0, 0), 10)


class TestSubordinatorPath:
    def test_degenerate_order_is_clock(self):
        path = subordinator_path(1.0, 0.1, 1.0, RngStream(0, 0))
        assert path.stop_index == 10
        np.testing.assert_allclose(path.values, np.linspace(0.0, 1.0, 11), atol=1e-15)
        assert path.stopping_time == pytest.approx(1.0)

    @pytest.mark.parametrize("beta", [0.3, 0.6, 0.9])
    def test_first_crossing(self, beta):
        path = subordinator_path(beta, 1e-2, 1.0, RngStream(3, 0), block_size=16)
        assert path.values[0] == 0.0
        assert np.all(np.diff(path.values) > 0)
        assert path.values[path.stop_index] >= 1.0
        assert path.values[path.stop_index - 1] < 1.0
        assert path.values.size == path.stop_index + 1

    def test_reproducible(self):
        a = subordinator_path(0.6, 1e-3, 1.0, RngStream(21, 5))
        b = subordinator_path(0.6, 1e-3, 1.0, RngStream(21, 5))
        np.testing.assert_array_equal(a.values, b.values)

    def test_bad_step(self):
        with pytest.raises(DomainError):
            subordinator_path(0.6, 0.0, 1.0, RngStream(0, 0))

    def test_discrete_stopping_time_matches_direct_law(self):
        dt, t, beta = 1e-3, 1.0, 0.6
        discrete = np.array(
            [subordinator_path(beta, dt, t, RngStream(100, i)).stopping_time for i in range(20_000)]
        )
        direct = exit_time_samples(beta, t, RngStream(200, 0), 1_000_000)
        assert stats.ks_2samp(discrete, direct).statistic <= 0.02


class TestSelfSimilarity:
    @pytest.mark.parametrize("s", [0.25, 4.0])
    def test_sum_of_increments_scales(self, s):
        beta, steps, n = 0.7, 8, 100_000
        summed = subordinator_increments(beta, s / steps, RngStream(8, 0), steps * n).reshape(n, steps).sum(axis=1)
        scaled = s ** (1.0 / beta) * draw_one_sided_stable(beta, RngStream(8, 1), n)
        assert stats.ks_2samp(summed, scaled).statistic < 0.02


class TestExitTimeSamples:
    @pytest.mark.parametrize("beta", [0.4, 0.6, 0.8])
    def test_mean(self, beta):
        t = 2.0
        tau = exit_time_samples(beta, t, RngStream(9, 0), 200_000)
        se = tau.std(ddof=1) / math.sqrt(tau.size)
        assert abs(tau.mean() - t**beta / math.gamma(1.0 + beta)) < 4.0 * se

    def test_degenerate_order_is_constant(self):
        np.testing.assert_array_equal(exit_time_samples(1.0, 0.7, RngStream(0, 0), 5), np.full(5, 0.7))
