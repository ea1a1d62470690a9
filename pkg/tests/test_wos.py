import math

import numpy as np
import pytest
from scipy import integrate, stats

from frackac.errors import DomainError
from frackac.stable import RngStream
from frackac.wos import (
    SpatialState,
    WosParams,
    ball_radius,
    draw_jump_radii,
    draw_unit_directions,
    exit_time_constant,
    exit_time_second_moment,
    radial_exit_cdf,
    sample_jump_radius,
    sample_unit_direction,
    wos_step,
)


class TestExitTimeConstant:
    @pytest.mark.parametrize("dim", [2, 3, 10, 100])
    def test_brownian_case(self, dim):
        assert exit_time_constant(2.0, dim) == pytest.approx(1.0 / (2.0 * dim), rel=1e-12)

    def test_cauchy_plane(self):
        assert exit_time_constant(1.0, 2) == pytest.approx(2.0 / math.pi, rel=1e-12)

    @pytest.mark.parametrize("alpha,dim", [(0.0, 2), (2.5, 2), (1.0, 1), (1.0, 2.5)])
    def test_bad_orders(self, alpha, dim):
        with pytest.raises(DomainError):
            exit_time_constant(alpha, dim)


class TestBallRadius:
    def test_known_radii(self):
        assert ball_radius(2.0, 2, 0.01) == pytest.approx(0.2, rel=1e-12)
        assert ball_radius(1.0, 2, 0.01) == pytest.approx(0.01 * math.pi / 2.0, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7])
    @pytest.mark.parametrize("dim", [2, 5])
    def test_mean_exit_time_is_step(self, alpha, dim):
        r = ball_radius(alpha, dim, 1e-3)
        assert r**alpha * exit_time_constant(alpha, dim) == pytest.approx(1e-3, rel=1e-12)

    def test_scaling(self):
        alpha = 1.3
        assert ball_radius(alpha, 2, 4e-3) == pytest.approx(4.0 ** (1.0 / alpha) * ball_radius(alpha, 2, 1e-3), rel=1e-12)

    def test_params_from_step(self):
        params = WosParams.from_step(1.5, 3, 1e-3)
        assert params.radius == ball_radius(1.5, 3, 1e-3)
        assert params.dim == 3


class TestJumpRadius:
    def test_cauchy_median(self):
        assert sample_jump_radius(1.0, 2.0, 0.5) == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-10)

    def test_cauchy_closed_form(self):
        # alpha = 1: the radial variate is arcsine distributed
        omega = np.linspace(0.01, 0.99, 99)
        expected = 1.0 / np.sin(math.pi * omega / 2.0)
        np.testing.assert_allclose(sample_jump_radius(1.0, 1.0, omega), expected, rtol=1e-10)

    def test_never_below_radius(self):
        omega = np.linspace(1e-6, 1.0 - 1e-6, 1001)
        for alpha in (0.2, 1.0, 1.8):
            assert np.all(sample_jump_radius(alpha, 0.3, omega) >= 0.3)

    def test_upper_omega_limit(self):
        assert abs(sample_jump_radius(1.0, 1.0, 1.0 - 1e-12) - 1.0) < 1e-6

    def test_brownian_jump_is_radius(self):
        assert sample_jump_radius(2.0, 0.7, 0.123) == 0.7

    @pytest.mark.parametrize("omega", [0.0, 1.0, -0.5])
    def test_omega_outside_open_interval(self, omega):
        with pytest.raises(DomainError):
            sample_jump_radius(1.0, 1.0, omega)


class TestRadialLaw:
    @staticmethod
    def _poisson_kernel_cdf(alpha, rho):
        # radial density proportional to (s^2 - 1)^(-alpha/2) / s on (1, inf)
        partial, _ = integrate.quad(
            lambda s: (s + 1.0) ** (-alpha / 2.0) / s,
            1.0,
            rho,
            weight="alg",
            wvar=(-alpha / 2.0, 0.0),
            epsabs=1e-13,
            epsrel=1e-12,
        )
        total = math.pi / (2.0 * math.sin(math.pi * alpha / 2.0))
        return partial / total

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_cdf_matches_poisson_kernel(self, alpha):
        for rho in (1.01, 1.5, 2.0, 5.0, 20.0):
            assert radial_exit_cdf(alpha, rho) == pytest.approx(self._poisson_kernel_cdf(alpha, rho), abs=1e-8)

    def test_cdf_support(self):
        assert radial_exit_cdf(1.0, 0.5) == 0.0
        assert radial_exit_cdf(2.0, 1.0) == 1.0

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_vectorized_draws_follow_law(self, alpha):
        rho = draw_jump_radii(alpha, 1.0, RngStream(31, 0), 1_000_000)
        assert stats.kstest(rho, lambda s: radial_exit_cdf(alpha, s)).statistic <= 0.005

    def test_steps_follow_law(self):
        alpha = 1.3
        params = WosParams.from_step(alpha, 2, 1e-2)
        rng = RngStream(32, 0)
        state = SpatialState(np.zeros(2))
        jumps = []
        for _ in range(10_000):
            nxt = wos_step(state, params, rng)
            jumps.append(np.linalg.norm(nxt.position - state.position) / params.radius)
            state = nxt
        assert stats.kstest(np.array(jumps), lambda s: radial_exit_cdf(alpha, s)).statistic <= 0.02


class TestDirections:
    @pytest.mark.parametrize("dim", [2, 10, 100])
    def test_uniform_on_sphere(self, dim):
        n = 100_000
        u = draw_unit_directions(dim, RngStream(40, dim), n)
        np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0, rtol=1e-12)
        se = math.sqrt(1.0 / dim / n)
        assert np.all(np.abs(u.mean(axis=0)) < 5.0 * se)
        np.testing.assert_allclose(np.diag(np.cov(u.T)), 1.0 / dim, atol=0.01)

    def test_single_direction(self):
        u = sample_unit_direction(3, RngStream(0, 0))
        assert u.shape == (3,)
        assert np.linalg.norm(u) == pytest.approx(1.0, rel=1e-12)

    def test_bad_dimension(self):
        with pytest.raises(DomainError):
            sample_unit_direction(1, RngStream(0, 0))


class TestWosStep:
    def test_brownian_step_length(self):
        params = WosParams.from_step(2.0, 3, 1e-3)
        state = SpatialState(np.array([0.1, -0.2, 0.3]), step_index=4)
        nxt = wos_step(state, params, RngStream(1, 0))
        assert np.linalg.norm(nxt.position - state.position) == pytest.approx(params.radius, rel=1e-12)
        assert nxt.step_index == 5

    def test_reproducible(self):
        params = WosParams.from_step(0.8, 2, 1e-3)
        a = wos_step(SpatialState(np.zeros(2)), params, RngStream(5, 5))
        b = wos_step(SpatialState(np.zeros(2)), params, RngStream(5, 5))
        np.testing.assert_array_equal(a.position, b.position)


class TestSecondMoment:
    @pytest.mark.parametrize("dim", [2, 3, 5])
    def test_brownian_closed_form(self, dim):
        r = 0.7
        expected = r**4 * (dim + 4) / (4.0 * dim * dim * (dim + 2))
        assert exit_time_second_moment(2.0, dim, r) == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    @pytest.mark.parametrize("dim", [2, 3])
    def test_bounds(self, alpha, dim):
        r = 0.5
        second = exit_time_second_moment(alpha, dim, r)
        mean = r**alpha * exit_time_constant(alpha, dim)
        assert mean * mean <= second <= 4.0 * r ** (2.0 * alpha)

    def test_bad_radius(self):
        with pytest.raises(DomainError):
            exit_time_second_moment(1.0, 2, 0.0)
