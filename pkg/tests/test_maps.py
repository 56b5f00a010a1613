"""
Tests for the map gallery, test bumps and mollification.
"""
import math
import pytest
import numpy as np
from scipy.special import exp1

from app.errors import DomainError, SingularPointError, UnknownMapError
from app.maps import (
    MollifierSpec,
    TestFunction,
    dilate,
    finite_difference_matrices,
    gallery,
    jacobian_det,
    kernel_nodes,
    mollify,
    rotation_distortion,
    scale,
    unit_bump_mass,
)
from app.schemas.domain_payload import Domain

POINTS = np.array([[0.3, 0.1], [-0.2, 0.5], [0.05, -0.7], [0.6, 0.6]])


class TestGallery:
    """Test building and evaluating gallery maps."""

    def test_power_two(self):
        """Test z -> z^2 at 1 + i."""
        assert gallery("power-2").value_at((1.0, 1.0)) == pytest.approx([0.0, 2.0])

    def test_negative_power_is_conjugated(self):
        """Test power--1 agrees with the conjugation map."""
        assert np.allclose(gallery("power--1")(POINTS), gallery("conjugation")(POINTS))

    def test_power_with_parameter(self):
        """Test the power entry with an explicit k."""
        assert gallery("power", k=3).label == "power-3"

    def test_power_zero_rejected(self):
        """Test that k = 0 is not a gallery map."""
        with pytest.raises(UnknownMapError):
            gallery("power", k=0)

    def test_power_without_exponent(self):
        """Test that the power entry needs k."""
        with pytest.raises(UnknownMapError):
            gallery("power")

    def test_unknown_name(self):
        """Test that unknown names raise."""
        with pytest.raises(UnknownMapError):
            gallery("spiral")

    def test_aliases(self):
        """Test the short aliases."""
        assert gallery("loglog").label == "loglog-counterexample"
        assert gallery("quartic").label == "gradient-quartic"

    def test_constant_default_value(self):
        """Test the default constant value."""
        assert np.allclose(gallery("constant")(POINTS), [[2.0, 0.0]] * len(POINTS))

    def test_rotation_shorthand(self):
        """Test rotation-0.2 maps (x, y) to 0.2 (-y, x)."""
        f = gallery("rotation-0.2")
        assert f.label == "rotation-0.2"
        assert f.value_at((1.0, 2.0)) == pytest.approx([-0.4, 0.2])

    def test_rotation_distortion_entry(self):
        """Test the rotation-distortion entry adds the rotation to its base."""
        f = gallery("rotation-distortion", base="gradient-quartic", delta=0.5)
        x = np.array([[0.4, -0.3]])
        expected = x ** 3 + 0.5 * np.array([[0.3, 0.4]])
        assert np.allclose(f(x), expected)

    def test_loglog_is_clamped_at_origin(self):
        """Test the log-log map is finite at its singular point."""
        f = gallery("loglog-counterexample")
        value = f.value_at((0.0, 0.0))
        assert np.all(np.isfinite(value))
        assert f.is_singular(np.zeros((1, 2)))[0]

    @pytest.mark.parametrize("name", ["identity", "power-2", "power-3", "conjugation", "gradient-quartic", "rotation-0.7"])
    def test_exact_differential_matches_differences(self, name):
        """Test the exact differential against central differences."""
        f = gallery(name)
        exact = f.jacobian_matrices(POINTS)
        approx = finite_difference_matrices(f, POINTS, 1e-5)
        assert np.allclose(exact, approx, atol=1e-8)


class TestDeterminants:
    """Test pointwise Jacobian determinants."""

    def test_power_two_determinant(self):
        """Test det D(z^2) = |2z|^2."""
        assert jacobian_det(gallery("power-2"), (0.5, 0.0)) == pytest.approx(1.0)

    def test_conjugation_determinant(self):
        """Test the conjugation reverses orientation."""
        assert jacobian_det(gallery("conjugation"), (0.1, 0.2)) == pytest.approx(-1.0)

    def test_determinant_at_singular_point(self):
        """Test that the log-log map has no determinant at 0."""
        with pytest.raises(SingularPointError):
            jacobian_det(gallery("loglog"), (0.0, 0.0))

    def test_finite_differences_without_differential(self):
        """Test maps without an exact differential fall back to differences."""
        f = gallery("power-2")
        plain = type(f)(evaluate=f.evaluate, label="plain-square")
        assert jacobian_det(plain, (0.5, 0.0)) == pytest.approx(1.0, abs=1e-6)


class TestTransforms:
    """Test scaling, dilation and rotation distortion."""

    def test_scale(self):
        """Test x -> lam f(x)."""
        f = scale(gallery("identity"), 3.0)
        assert f.value_at((1.0, 2.0)) == pytest.approx([3.0, 6.0])
        assert jacobian_det(f, (0.1, 0.1)) == pytest.approx(9.0)

    def test_dilate_moves_singular_points(self):
        """Test x -> f(lam x) and its singular set."""
        f = dilate(gallery("power-2"), 2.0)
        assert f.value_at((0.5, 0.0)) == pytest.approx([1.0, 0.0])
        assert dilate(gallery("loglog"), 2.0).singular_points == ((0.0, 0.0),)

    def test_rotation_distortion_differential(self):
        """Test that the distortion adds delta times the rotation to Df."""
        f = rotation_distortion(gallery("identity"), 0.5)
        # det(I + 0.5 R) = 1 + 0.25
        assert jacobian_det(f, (0.3, 0.3)) == pytest.approx(1.25)
        assert f.label == "identity+rotation-0.5"


class TestTestFunction:
    """Test the smooth bumps used as test functions."""

    def test_unit_mass_matches_closed_form(self):
        """Test the unit bump mass in the plane."""
        assert unit_bump_mass(2) == pytest.approx(math.pi * (math.exp(-1) - exp1(1.0)), rel=1e-8)

    def test_integral_scales_with_radius(self):
        """Test the integral scales like radius^n times amplitude."""
        phi = TestFunction(center=(0.2, 0.1), radius=0.5, amplitude=2.0)
        assert phi.integral() == pytest.approx(2.0 * 0.25 * unit_bump_mass(2))

    def test_vanishes_outside_support(self):
        """Test the bump is zero outside its ball."""
        phi = TestFunction(center=(0.0, 0.0), radius=0.5)
        values = phi.evaluate(np.array([[0.5, 0.0], [0.6, 0.0], [0.0, 0.0]]))
        assert values[0] == 0.0
        assert values[1] == 0.0
        assert values[2] == pytest.approx(math.exp(-1))

    def test_gradient_matches_differences(self):
        """Test the analytic gradient."""
        phi = TestFunction(center=(0.1, -0.1), radius=0.4)
        x = np.array([[0.2, 0.0], [0.0, -0.3]])
        h = 1e-6
        approx = np.column_stack([
            (phi.evaluate(x + [h, 0]) - phi.evaluate(x - [h, 0])) / (2 * h),
            (phi.evaluate(x + [0, h]) - phi.evaluate(x - [0, h])) / (2 * h),
        ])
        assert np.allclose(phi.gradient(x), approx, atol=1e-7)

    def test_nonpositive_radius_rejected(self):
        """Test that a bump needs a positive radius."""
        with pytest.raises(ValueError):
            TestFunction(center=(0.0, 0.0), radius=0.0)


class TestMollify:
    """Test mollification with the standard bump kernel."""

    def test_kernel_weights_have_unit_mass(self):
        """Test the discrete kernel is normalized."""
        nodes, weights = kernel_nodes(2, 16)
        assert weights.sum() == pytest.approx(1.0)
        assert np.all(np.linalg.norm(nodes, axis=1) < 1)

    def test_power_two_is_reproduced(self):
        """Test the symmetric kernel reproduces z^2 at (0.5, 0)."""
        smoothed = mollify(gallery("power-2"), MollifierSpec(epsilon=0.05))
        assert smoothed.value_at((0.5, 0.0)) == pytest.approx([0.25, 0.0], abs=1e-12)

    def test_affine_maps_are_reproduced(self):
        """Test the identity is unchanged by mollification."""
        smoothed = mollify(gallery("identity"), MollifierSpec(epsilon=0.1))
        assert np.allclose(smoothed(POINTS), POINTS, atol=1e-12)

    def test_cubic_gets_second_order_shift(self):
        """Test the quartic gradient moves by O(eps^2)."""
        f = gallery("gradient-quartic")
        x = np.array([[0.5, 0.2]])
        coarse = np.abs(mollify(f, MollifierSpec(epsilon=0.1))(x) - f(x)).max()
        fine = np.abs(mollify(f, MollifierSpec(epsilon=0.05))(x) - f(x)).max()
        assert fine == pytest.approx(coarse / 4, rel=1e-6)

    def test_epsilon_larger_than_margin(self):
        """Test that eps must be smaller than the distance to the boundary."""
        domain = Domain.ball((0.0, 0.0), 1.0)
        with pytest.raises(DomainError):
            mollify(gallery("identity"), MollifierSpec(epsilon=0.6), ((0.0, 0.0), 0.5), domain)

    def test_smoothed_map_is_smooth(self):
        """Test mollified maps are marked smooth."""
        smoothed = mollify(gallery("loglog"), MollifierSpec(epsilon=0.05))
        assert smoothed.smoothness_hint == "smooth"
