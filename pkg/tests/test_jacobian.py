"""
Tests for distributional Jacobian and curl pairings and the sign classification.
"""
import math
import pytest
import numpy as np
from scipy import integrate

from app.errors import DimensionError, DomainError, ParameterError, ResolutionError
from app.jacobian import (
    apriori_bound_check,
    curl_pairing,
    default_family,
    distortion_identity_check,
    jac_pairing,
    pairing_tolerance,
    sign_classify,
)
from app.maps import TestFunction, bump_profile, gallery, rotation_distortion, scale
from app.schemas.domain_payload import Domain, QuadratureSpec


def radial_oracle(weight, radius: float = 0.5) -> float:
    """Integral of weight(|x|) phi(x) over the disk for the bump of the given radius at 0."""
    integrand = lambda rho: weight(rho) * float(bump_profile(np.array([(rho / radius) ** 2]))[0]) * rho
    value, _ = integrate.quad(integrand, 0.0, radius, limit=200)
    return 2 * math.pi * value


class TestJacPairing:
    """Test Jac(f)[phi] along the mollification sequence."""

    def test_identity_pairs_to_bump_integral(self, unit_disk, standard_bump, coarse_quad):
        """Test det = 1 gives the integral of phi."""
        result = jac_pairing(gallery("identity"), standard_bump, unit_disk, quad=coarse_quad)
        assert result.value == pytest.approx(radial_oracle(lambda rho: 1.0), rel=1e-3)
        assert result.converged
        assert len(result.epsilon_trend) == 3

    def test_power_two_radial_oracle(self, unit_disk, standard_bump):
        """Test Jac(z^2)[phi] = int 4|x|^2 phi."""
        result = jac_pairing(gallery("power-2"), standard_bump, unit_disk, quad=QuadratureSpec(sample_count=32))
        assert result.value == pytest.approx(radial_oracle(lambda rho: 4 * rho * rho), rel=1e-3)
        assert result.value == pytest.approx(result.exact_value, abs=1e-6)

    def test_quartic_extrapolation(self, unit_disk, standard_bump, coarse_quad):
        """Test the eps^2 extrapolation recovers the exact pairing."""
        result = jac_pairing(gallery("gradient-quartic"), standard_bump, unit_disk, quad=coarse_quad)
        assert abs(result.extrapolated - result.exact_value) < abs(result.value - result.exact_value)

    def test_singular_map_has_no_exact_value(self, unit_disk, standard_bump, coarse_quad):
        """Test only smooth maps get an exact pairing."""
        result = jac_pairing(gallery("loglog"), standard_bump, unit_disk, quad=coarse_quad)
        assert result.exact_value is None
        assert result.value == 0.0

    def test_increasing_epsilons_rejected(self, unit_disk, standard_bump):
        """Test the scales must decrease."""
        with pytest.raises(ResolutionError):
            jac_pairing(gallery("identity"), standard_bump, unit_disk, [0.02, 0.04, 0.08])

    def test_two_epsilons_rejected(self, unit_disk, standard_bump):
        """Test at least three scales are required."""
        with pytest.raises(ResolutionError):
            jac_pairing(gallery("identity"), standard_bump, unit_disk, [0.08, 0.04])

    def test_support_touching_boundary(self, unit_disk):
        """Test the bump must be compactly inside the domain."""
        phi = TestFunction(center=(0.8, 0.0), radius=0.5)
        with pytest.raises(DomainError):
            jac_pairing(gallery("identity"), phi, unit_disk)

    def test_epsilon_wider_than_margin(self, unit_disk, standard_bump):
        """Test eps must be smaller than the distance from the support to the boundary."""
        with pytest.raises(DomainError):
            jac_pairing(gallery("identity"), standard_bump, unit_disk, [0.6, 0.3, 0.1])

    @pytest.mark.parametrize("lam", [-1.0, 2.0])
    def test_pairing_is_quadratic_in_the_map(self, unit_disk, standard_bump, coarse_quad, lam):
        """Test Jac(lam f)[phi] = lam^2 Jac(f)[phi] along the whole trend."""
        f = gallery("gradient-quartic")
        base = jac_pairing(f, standard_bump, unit_disk, quad=coarse_quad)
        scaled = jac_pairing(scale(f, lam), standard_bump, unit_disk, quad=coarse_quad)
        for (_, value), (_, scaled_value) in zip(base.epsilon_trend, scaled.epsilon_trend):
            assert scaled_value == pytest.approx(lam ** 2 * value, rel=1e-9)

    def test_pairing_is_linear_in_phi(self, unit_disk, coarse_quad):
        """Test doubling the bump amplitude doubles the pairing."""
        phi = TestFunction(center=(0.1, -0.1), radius=0.3)
        doubled = TestFunction(center=(0.1, -0.1), radius=0.3, amplitude=2.0)
        f = gallery("power-2")
        single = jac_pairing(f, phi, unit_disk, quad=coarse_quad).value
        assert jac_pairing(f, doubled, unit_disk, quad=coarse_quad).value == pytest.approx(2 * single, rel=1e-9)

    def test_tolerance_scales_with_sup(self, standard_bump):
        """Test the tolerance uses max(1, sup |f|)."""
        small = pairing_tolerance(gallery("identity"), standard_bump)
        large = pairing_tolerance(gallery("constant", value=(10.0, 0.0)), standard_bump)
        assert small == pytest.approx(1e-6 * standard_bump.integral())
        assert large == pytest.approx(10 * small)


class TestCurlPairing:
    """Test the distributional curl."""

    @pytest.mark.parametrize("delta", [0.2, 1.0])
    def test_rotation(self, unit_disk, standard_bump, delta):
        """Test curl(delta (-y, x))[phi] = 2 delta int(phi)."""
        value = curl_pairing(gallery("rotation", delta=delta), standard_bump, unit_disk, QuadratureSpec(sample_count=48))
        assert value == pytest.approx(2 * delta * standard_bump.integral(), rel=1e-3)

    def test_gradient_field_is_curl_free(self, unit_disk, standard_bump):
        """Test the gradient of a function has zero curl."""
        assert abs(curl_pairing(gallery("gradient-quartic"), standard_bump, unit_disk)) < 1e-12

    @pytest.mark.parametrize("center", [(0.3, 0.0), (-0.2, 0.25)])
    def test_superposition_of_fields(self, unit_disk, center):
        """Test curl(f + delta rotation)[phi] = curl(f)[phi] + curl(delta rotation)[phi] on two bumps."""
        phi = TestFunction(center=center, radius=0.25)
        quad = QuadratureSpec(sample_count=48)
        f = gallery("power-2")
        combined = curl_pairing(rotation_distortion(f, 0.4), phi, unit_disk, quad)
        parts = curl_pairing(f, phi, unit_disk, quad) + curl_pairing(gallery("rotation", delta=0.4), phi, unit_disk, quad)
        assert combined == pytest.approx(parts, rel=1e-9, abs=1e-12)

    def test_bumps_add(self, unit_disk):
        """Test the curl against two bumps equals the curl against their combined amplitude."""
        quad = QuadratureSpec(sample_count=48)
        rotation = gallery("rotation", delta=1.0)
        small = TestFunction(center=(0.2, 0.2), radius=0.25, amplitude=0.5)
        large = TestFunction(center=(0.2, 0.2), radius=0.25, amplitude=1.5)
        summed = TestFunction(center=(0.2, 0.2), radius=0.25, amplitude=2.0)
        total = curl_pairing(rotation, small, unit_disk, quad) + curl_pairing(rotation, large, unit_disk, quad)
        assert curl_pairing(rotation, summed, unit_disk, quad) == pytest.approx(total, rel=1e-9)

    def test_planar_only(self):
        """Test the curl is planar."""
        ball = Domain.ball((0.0, 0.0, 0.0), 1.0)
        phi = TestFunction(center=(0.0, 0.0, 0.0), radius=0.5)
        with pytest.raises(DimensionError):
            curl_pairing(gallery("identity"), phi, ball)


class TestSignClassify:
    """Test the sign classification over a bump family."""

    def test_default_family_layout(self, unit_disk):
        """Test the 5 x 5 family fits inside the disk."""
        family = default_family(unit_disk)
        assert len(family) == 25
        assert all(unit_disk.margin(phi.center, phi.radius) > 0.08 for phi in family)

    def test_polar_family_avoids_singularity(self, unit_disk):
        """Test bumps stay away from a singular center."""
        family = default_family(unit_disk, gallery("loglog"))
        assert len(family) == 25
        assert all(np.linalg.norm(phi.center) > phi.radius for phi in family)

    def test_family_is_planar(self):
        """Test the default family needs a planar domain."""
        with pytest.raises(DimensionError):
            default_family(Domain.ball((0.0, 0.0, 0.0), 1.0))

    @pytest.mark.parametrize(
        "name,verdict",
        [
            ("identity", "positive-evidence"),
            ("power-2", "positive-evidence"),
            ("conjugation", "sign-changing"),
            ("constant", "null"),
            ("loglog", "null"),
        ],
    )
    def test_verdicts(self, unit_disk, name, verdict):
        """Test the verdict for gallery maps."""
        result = sign_classify(gallery(name), unit_disk, quad=QuadratureSpec(sample_count=16))
        assert result.verdict == verdict
        assert len(result.pairings) == 25

    def test_witness_is_minimizer(self, unit_disk):
        """Test the witness attains the minimal pairing."""
        result = sign_classify(gallery("conjugation"), unit_disk, quad=QuadratureSpec(sample_count=16))
        assert result.min_pairing == min(result.pairings)
        assert result.min_pairing < 0
        assert not result.is_nonnegative

    def test_empty_family(self, unit_disk):
        """Test an empty family is rejected."""
        with pytest.raises(ResolutionError):
            sign_classify(gallery("identity"), unit_disk, family=[])


class TestDistortionIdentity:
    """Test Jac(f + delta R) = Jac(f) + delta^2 int(phi) + delta curl(f)."""

    @pytest.mark.parametrize("name", ["identity", "gradient-quartic"])
    def test_identity_holds(self, unit_disk, standard_bump, coarse_quad, name):
        """Test the identity for curl-free maps."""
        report = distortion_identity_check(gallery(name), 0.3, standard_bump, unit_disk, quad=coarse_quad)
        assert report.passed
        assert report.check_id == f"distortion-identity/{name}/delta=0.3"

    def test_identity_with_curl(self, unit_disk, standard_bump):
        """Test a map with nonzero curl."""
        report = distortion_identity_check(
            gallery("rotation-0.2"), 1.0, standard_bump, unit_disk, quad=QuadratureSpec(sample_count=48)
        )
        assert report.passed
        assert report.quantities["curl"] == pytest.approx(0.4 * standard_bump.integral(), rel=1e-3)

    def test_zero_delta_rejected(self, unit_disk, standard_bump):
        """Test delta = 0 is not a distortion."""
        with pytest.raises(ParameterError):
            distortion_identity_check(gallery("identity"), 0.0, standard_bump, unit_disk)


class TestAprioriBound:
    """Test the a priori bound check."""

    def test_smoothness_below_threshold(self, unit_disk, standard_bump):
        """Test s must exceed max((n-1)/n, n/(n+1))."""
        with pytest.raises(ParameterError):
            apriori_bound_check(gallery("identity"), standard_bump, 0.5, unit_disk)

    def test_constant_map_is_degenerate(self, unit_disk, standard_bump):
        """Test a constant has zero pairing and zero seminorm."""
        report = apriori_bound_check(
            gallery("constant"), standard_bump, 0.75, unit_disk, quad=QuadratureSpec(sample_count=16)
        )
        assert report.passed
        assert "degenerate" in report.flags
