import math

import numpy as np
import pytest
from scipy import special

from frackac.errors import ConfigurationError, UsageError
from frackac.geometry import (
    Ball,
    HyperRectangle,
    LShape,
    PolarStar,
    domain_from_spec,
    hexagonal_hailstone,
)
from frackac.stable import RngStream


class LooseBall(Ball):
    """Unit ball proposed from a far too large box."""

    def bounding_box(self):
        return self.center - 1000.0, self.center + 1000.0


class SphereFirstStream(RngStream):
    """Stream whose first radial batch is all ones, putting every point on the sphere."""

    def open_uniform(self, size=None):
        self.radial_calls = getattr(self, "radial_calls", 0) + 1
        if self.radial_calls == 1:
            return np.ones(size)
        return super().open_uniform(size)


class TestContains:
    def test_ball(self):
        ball = Ball.unit(2)
        assert ball.contains((0.0, 0.0)) is True
        assert ball.contains((1.0, 0.0)) is False
        assert ball.contains((0.6, 0.79)) is True

    def test_l_shape(self):
        l_shape = LShape()
        assert l_shape.contains((-0.5, -0.5)) is True
        assert l_shape.contains((0.5, 0.5)) is False
        assert l_shape.contains((0.0, -0.5)) is True
        assert l_shape.contains((0.0, 0.5)) is False
        assert l_shape.contains((-1.0, 0.0)) is False

    def test_polar_star(self):
        star = hexagonal_hailstone()
        assert star.contains((1.05, 0.0)) is True
        assert star.contains((1.2, 0.0)) is False

    def test_batch(self):
        points = np.array([[0.0, 0.0], [2.0, 0.0], [0.5, -0.5]])
        np.testing.assert_array_equal(Ball.unit(2).contains(points), [True, False, True])

    def test_dimension_mismatch(self):
        with pytest.raises(UsageError):
            Ball.unit(3).contains((0.0, 0.0))

    def test_hailstone_boundary(self):
        star = hexagonal_hailstone()
        theta = np.linspace(-math.pi, math.pi, 1000, endpoint=False)
        r = star.radius_at(theta)
        direction = np.column_stack([np.cos(theta), np.sin(theta)])
        assert np.all(star.contains((r - 1e-9)[:, None] * direction))
        assert not np.any(star.contains((r + 1e-9)[:, None] * direction))


class TestVolumes:
    def test_unit_disk(self):
        assert Ball.unit(2).volume == pytest.approx(math.pi, rel=1e-13)

    def test_high_dimensional_ball(self):
        expected = math.exp(50.0 * math.log(math.pi) - special.gammaln(51.0))
        assert Ball.unit(100).volume == pytest.approx(expected, rel=1e-10)

    def test_l_shape(self):
        assert LShape().volume == 3.0
        np.testing.assert_allclose(LShape().centroid, [-1.0 / 6.0, -1.0 / 6.0])

    def test_hailstone_area(self):
        # mean of R^2 / 2 over the circle: (1 + 0.81 / 2 + 0.01 / 2) pi
        assert hexagonal_hailstone().volume == pytest.approx(1.41 * math.pi, rel=1e-9)

    def test_hailstone_centroid(self):
        np.testing.assert_allclose(hexagonal_hailstone().centroid, [0.0, 0.0], atol=1e-10)

    def test_hyper_rectangle(self):
        box = HyperRectangle([0.0, -1.0, 2.0], [1.0, 1.0, 5.0])
        assert box.volume == 6.0
        np.testing.assert_allclose(box.centroid, [0.5, 0.0, 3.5])


class TestSampling:
    @pytest.mark.parametrize(
        "domain", [Ball.unit(2), LShape(), hexagonal_hailstone(), HyperRectangle([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])]
    )
    def test_points_inside_and_bounded(self, domain):
        points = domain.sample_interior_points(5000, RngStream(1, 0))
        assert points.shape == (5000, domain.dim)
        assert np.all(domain.contains(points))
        distance = np.linalg.norm(points - domain.centroid, axis=1)
        assert np.all(distance <= domain.bounding_radius)

    def test_uniform_in_disk(self):
        points = Ball.unit(2).sample_interior_points(100_000, RngStream(2, 0))
        assert np.mean(np.sum(points * points, axis=1)) == pytest.approx(0.5, abs=0.01)

    def test_uniform_in_l_shape(self):
        points = LShape().sample_interior_points(100_000, RngStream(3, 0))
        upper_left = (points[:, 0] < 0.0) & (points[:, 1] > 0.0)
        assert upper_left.mean() == pytest.approx(1.0 / 3.0, abs=0.01)

    @pytest.mark.parametrize("domain", [LShape(), hexagonal_hailstone()])
    def test_acceptance_matches_volume_ratio(self, domain):
        lower, upper = domain.bounding_box()
        n = 200_000
        proposals = lower + (upper - lower) * RngStream(4, 0).generator.random((n, 2))
        rate = domain.contains(proposals).mean()
        expected = domain.volume / np.prod(upper - lower)
        assert abs(rate - expected) < 3.0 * math.sqrt(expected * (1.0 - expected) / n) + 1e-3

    def test_high_dimensional_ball_is_sampled_directly(self):
        ball = Ball.unit(100)
        points = ball.sample_interior_points(20_000, RngStream(5, 0))
        assert np.all(ball.contains(points))
        norms = np.linalg.norm(points, axis=1)
        assert norms.mean() == pytest.approx(100.0 / 101.0, abs=0.005)

    def test_points_on_sphere_are_redrawn(self):
        ball = Ball.unit(50)
        rng = SphereFirstStream(5, 0)
        points = ball.sample_interior_points(50, rng)
        assert rng.radial_calls >= 2
        assert np.all(ball.contains(points))
        # nothing pulled inward: fresh radii U^(1/50) fall below 0.6 with probability 0.6^50
        assert np.all(np.linalg.norm(points, axis=1) > 0.6)

    def test_reproducible(self):
        a = LShape().sample_interior_points(100, RngStream(9, 0))
        b = LShape().sample_interior_points(100, RngStream(9, 0))
        np.testing.assert_array_equal(a, b)

    def test_hopeless_rejection_reported(self):
        with pytest.raises(ConfigurationError) as info:
            LooseBall(np.zeros(2)).sample_interior_points(10, RngStream(6, 0))
        assert info.value.field == "domain"

    def test_bad_count(self):
        with pytest.raises(UsageError):
            LShape().sample_interior_points(0, RngStream(0, 0))


class TestGrid:
    def test_l_shape_grid(self):
        grid = LShape().grid_points(21)
        assert np.all(LShape().contains(grid))
        # interior nodes of the 21 x 21 lattice, minus the removed quadrant (its axes included)
        assert grid.shape == (19 * 19 - 10 * 10, 2)

    def test_grid_is_two_dimensional_only(self):
        with pytest.raises(UsageError):
            Ball.unit(3).grid_points(10)


class TestSpecs:
    @pytest.mark.parametrize(
        "domain",
        [Ball.unit(3), Ball([0.5, 0.5], 2.0), LShape(), hexagonal_hailstone(), HyperRectangle([0.0, 0.0], [1.0, 2.0])],
    )
    def test_round_trip(self, domain):
        rebuilt = domain_from_spec(domain.to_spec())
        assert type(rebuilt) is type(domain)
        assert rebuilt.volume == pytest.approx(domain.volume, rel=1e-12)
        points = domain.sample_interior_points(200, RngStream(7, 0))
        assert np.all(rebuilt.contains(points))

    def test_ball_by_dimension(self):
        ball = domain_from_spec({"kind": "ball", "dim": 4})
        assert ball.dim == 4

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError) as info:
            domain_from_spec({"kind": "torus"})
        assert info.value.field == "domain.kind"

    def test_non_positive_star_radius(self):
        with pytest.raises(ConfigurationError):
            PolarStar(0.5, {1: 1.0})
