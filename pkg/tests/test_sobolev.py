"""
Tests for Gagliardo seminorms, restrictions, extensions and the modulus bound.
"""
import pytest
import numpy as np
from scipy import integrate

from app.degree import circle_trace
from app.errors import DimensionError, DomainError, ParameterError, QuadratureError
from app.maps import dilate, gallery, scale
from app.schemas.domain_payload import Domain, QuadratureSpec
from app.schemas.result_payload import FractionalParams
from app.sobolev import (
    ExtensionSpec,
    box_mass,
    circle_seminorm,
    extension_equivalence_check,
    extrapolate_cutoff,
    halfspace_extension_energy,
    modulus_bound_check,
    modulus_pairs,
    poisson_kernel,
    refinement_levels,
    restriction_inequality_check,
    smooth_step,
    gagliardo_seminorm,
    within_constant,
)

CRITICAL = FractionalParams.critical(2 / 3)


class TestFractionalParams:
    """Test the exponent bookkeeping."""

    def test_critical_exponent(self):
        """Test p = n/s."""
        assert CRITICAL.p == pytest.approx(3.0)
        assert CRITICAL.jacobian_threshold == pytest.approx(2 / 3)

    def test_trace_order(self):
        """Test s - 1/p."""
        assert FractionalParams(s=0.75, p=4.0).trace_order == pytest.approx(0.5)

    def test_invalid_smoothness(self):
        """Test s must lie in (0, 1)."""
        with pytest.raises(ValueError):
            FractionalParams(s=1.0, p=2.0)


class TestGagliardoSeminorm:
    """Test the seminorm estimator."""

    def test_constant_map_vanishes(self, unit_disk):
        """Test a constant has seminorm 0 at every level."""
        estimate = gagliardo_seminorm(gallery("constant"), unit_disk, CRITICAL, QuadratureSpec(sample_count=16))
        assert estimate.value == 0.0
        assert estimate.refinement_trend == [0.0, 0.0, 0.0]

    def test_trend_has_three_levels(self, unit_disk):
        """Test the value is the last of three refinement levels."""
        estimate = gagliardo_seminorm(gallery("identity"), unit_disk, CRITICAL, QuadratureSpec(sample_count=24))
        assert len(estimate.refinement_trend) == 3
        assert estimate.value == estimate.refinement_trend[-1]
        assert estimate.value > 0
        assert estimate.label == "identity"

    def test_homogeneous_in_the_map(self, unit_disk):
        """Test [lam f] = lam [f]."""
        quad = QuadratureSpec(sample_count=16)
        base = gagliardo_seminorm(gallery("power-2"), unit_disk, CRITICAL, quad).value
        scaled = gagliardo_seminorm(scale(gallery("power-2"), 2.0), unit_disk, CRITICAL, quad).value
        assert scaled == pytest.approx(2 * base, rel=1e-9)

    @pytest.mark.parametrize("name", ["identity", "power-2"])
    def test_monotone_under_shrinking_domain(self, unit_disk, name):
        """Test [f] on B(1/2) does not exceed [f] on B(1)."""
        quad = QuadratureSpec(sample_count=24)
        inner = gagliardo_seminorm(gallery(name), Domain.ball((0.0, 0.0), 0.5), CRITICAL, quad).value
        outer = gagliardo_seminorm(gallery(name), unit_disk, CRITICAL, quad).value
        assert 0 < inner <= outer

    @pytest.mark.parametrize("name", ["identity", "power-2", "gradient-quartic"])
    def test_critical_seminorm_is_dilation_invariant(self, unit_disk, name):
        """Test [f(2x)] on B(1/2) equals [f] on B(1) when p = n/s."""
        quad = QuadratureSpec(sample_count=24)
        base = gagliardo_seminorm(gallery(name), unit_disk, CRITICAL, quad).value
        dilated = gagliardo_seminorm(dilate(gallery(name), 2.0), Domain.ball((0.0, 0.0), 0.5), CRITICAL, quad).value
        assert dilated == pytest.approx(base, rel=1e-9)

    def test_subcritical_seminorm_scaling(self, unit_disk):
        """Test [f(2x)] on B(1/2) equals 2^((sp - n)/p) [f] on B(1) away from p = n/s."""
        params = FractionalParams(s=0.5, p=2.0)
        quad = QuadratureSpec(sample_count=24)
        base = gagliardo_seminorm(gallery("power-2"), unit_disk, params, quad).value
        dilated = gagliardo_seminorm(dilate(gallery("power-2"), 2.0), Domain.ball((0.0, 0.0), 0.5), params, quad).value
        assert dilated == pytest.approx(2.0 ** ((0.5 * 2.0 - 2) / 2.0) * base, rel=1e-9)

    def test_monte_carlo_is_seeded(self, unit_disk):
        """Test equal seeds give equal estimates and other seeds differ."""
        quad = QuadratureSpec(scheme="monte-carlo", sample_count=2000, seed=7)
        first = gagliardo_seminorm(gallery("identity"), unit_disk, CRITICAL, quad).value
        second = gagliardo_seminorm(gallery("identity"), unit_disk, CRITICAL, quad).value
        other = gagliardo_seminorm(
            gallery("identity"), unit_disk, CRITICAL, quad.model_copy(update={"seed": 8})
        ).value
        assert first == second
        assert first != other

    def test_singular_map_is_finite(self, unit_disk):
        """Test the log-log map has a finite estimate."""
        estimate = gagliardo_seminorm(gallery("loglog"), unit_disk, CRITICAL, QuadratureSpec(sample_count=24))
        assert np.isfinite(estimate.value)
        assert estimate.value > 0

    def test_exclusion_radius_too_large(self, unit_disk):
        """Test the exclusion radius is validated."""
        with pytest.raises(QuadratureError):
            gagliardo_seminorm(
                gallery("identity"), unit_disk, CRITICAL, QuadratureSpec(diagonal_exclusion_radius=3.0)
            )

    def test_refinement_levels(self):
        """Test the three node counts."""
        assert refinement_levels(32) == [8, 16, 32]
        assert refinement_levels(16) == [8, 8, 16]

    def test_extrapolation_falls_back_when_negative(self):
        """Test a negative extrapolation returns the near sum."""
        assert extrapolate_cutoff([1.0, 10.0], [0.1, 0.2], 1.0) == 1.0

    def test_extrapolation_removes_linear_bias(self):
        """Test S(delta) = S0 - c delta is extrapolated to S0."""
        assert extrapolate_cutoff([4.9, 4.8], [0.1, 0.2], 1.0) == pytest.approx(5.0)


class TestCircleSeminorm:
    """Test the seminorm of a trace on a circle."""

    def test_constant_trace(self):
        """Test a constant trace has seminorm 0."""
        trace = circle_trace(gallery("constant"), (0.0, 0.0), 1.0, 64)
        assert circle_seminorm(trace, CRITICAL) == 0.0

    def test_refinement_stability(self):
        """Test the identity trace agrees with a finer trace within 2%."""
        coarse = circle_seminorm(circle_trace(gallery("identity"), (0.0, 0.0), 1.0, 512), CRITICAL)
        fine = circle_seminorm(circle_trace(gallery("identity"), (0.0, 0.0), 1.0, 4096), CRITICAL)
        assert coarse == pytest.approx(fine, rel=2e-2)

    def test_rotation_invariance(self):
        """Test rotating the circle parametrization leaves the value unchanged."""
        trace = circle_trace(gallery("power-2"), (0.0, 0.0), 1.0, 128)
        rolled = type(trace)(trace.center, trace.radius, np.roll(trace.samples, 5, axis=0), trace.map_label)
        assert circle_seminorm(rolled, CRITICAL) == pytest.approx(circle_seminorm(trace, CRITICAL), rel=1e-12)


class TestRegressionHelpers:
    """Test the fitted-constant helpers."""

    def test_within_constant(self):
        """Test the 10% slack and the uncalibrated pass-through."""
        assert within_constant(1.05, 1.0)
        assert not within_constant(1.2, 1.0)
        assert within_constant(5.0, None)
        assert within_constant(None, 1.0)


class TestRestriction:
    """Test the restriction inequality check."""

    def test_trace_order_must_be_positive(self, unit_disk):
        """Test s - 1/p <= 0 is rejected."""
        with pytest.raises(ParameterError):
            restriction_inequality_check(gallery("identity"), unit_disk, FractionalParams(s=0.3, p=2.0))

    def test_constant_map_is_degenerate(self, unit_disk):
        """Test both sides vanish for a constant."""
        report = restriction_inequality_check(
            gallery("constant"), unit_disk, CRITICAL, radii_count=8, quad=QuadratureSpec(sample_count=16), M=64
        )
        assert report.passed
        assert report.quantities["ratio"] is None
        assert report.flags == ["degenerate", "uncalibrated"]

    def test_identity_ratio_is_recorded(self, unit_disk):
        """Test the identity produces a finite ratio below a generous constant."""
        report = restriction_inequality_check(
            gallery("identity"), unit_disk, CRITICAL, radii_count=8,
            quad=QuadratureSpec(sample_count=16), M=64, constant=1e6,
        )
        assert report.passed
        assert report.quantities["ratio"] > 0
        assert report.flags == []


class TestExtension:
    """Test the half-space extension energy."""

    def test_smooth_step(self):
        """Test the transition values."""
        values = smooth_step(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
        assert values == pytest.approx([0.0, 0.0, 0.5, 1.0, 1.0])

    def test_poisson_kernel_mass(self):
        """Test the discrete kernel carries the mass inside its box."""
        axis = np.linspace(-1.0, 1.0, 21)
        offsets = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)
        kernel = poisson_kernel(offsets, 0.3, 2, 1.05)
        assert kernel.sum() == pytest.approx(box_mass(0.3, 1.05, 2))
        assert kernel.sum() < 1.0

    def test_box_mass_matches_quadrature(self):
        """Test the closed-form box mass against direct integration of P_t."""
        t, half = 0.5, 1.0
        density = lambda y, x: t / (2 * np.pi * (x * x + y * y + t * t) ** 1.5)
        value, _ = integrate.dblquad(density, -half, half, -half, half)
        assert box_mass(t, half, 2) == pytest.approx(value, rel=1e-6)
        line, _ = integrate.quad(lambda x: t / (np.pi * (x * x + t * t)), -half, half)
        assert box_mass(t, half, 1) == pytest.approx(line, rel=1e-8)

    def test_tall_kernels_lose_tail_mass(self):
        """Test heights comparable to the box keep only part of the unit mass."""
        assert box_mass(1e-3, 6.0, 2) == pytest.approx(1.0, abs=1e-3)
        assert box_mass(4.0, 6.0, 2) < 0.55

    def test_box_mass_is_planar(self):
        """Test higher dimensions are rejected."""
        with pytest.raises(DimensionError):
            box_mass(1.0, 1.0, 3)

    def test_constant_map_has_no_energy(self):
        """Test the extension of a constant is constant."""
        spec = ExtensionSpec(resolution=16, levels=4)
        assert halfspace_extension_energy(gallery("constant"), CRITICAL, spec) == 0.0

    def test_identity_has_positive_energy(self):
        """Test the identity extension has positive energy."""
        spec = ExtensionSpec(resolution=16, levels=6)
        assert halfspace_extension_energy(gallery("identity"), CRITICAL, spec) > 0

    def test_height_below_grid_spacing(self):
        """Test the truncation height must exceed the grid spacing."""
        with pytest.raises(DomainError):
            halfspace_extension_energy(gallery("identity"), CRITICAL, ExtensionSpec(height=0.01, resolution=16))


class TestExtensionEquivalence:
    """Test the extension energy against the seminorm."""

    def test_identity_spread(self, unit_disk):
        """Test the identity gives a finite spread of at least one."""
        report = extension_equivalence_check(
            gallery("identity"), unit_disk, CRITICAL,
            truncation=ExtensionSpec(resolution=32, levels=8), quad=QuadratureSpec(sample_count=16),
        )
        assert report.passed
        assert report.quantities["energy"] > 0
        assert report.quantities["seminorm"] > 0
        assert report.quantities["spread"] >= 1.0
        assert report.flags == ["uncalibrated"]

    def test_spread_above_constant_fails(self, unit_disk):
        """Test a frozen constant well below the spread fails the regression."""
        spec = ExtensionSpec(resolution=32, levels=8)
        quad = QuadratureSpec(sample_count=16)
        fitted = extension_equivalence_check(gallery("power-2"), unit_disk, CRITICAL, spec, quad)
        report = extension_equivalence_check(
            gallery("power-2"), unit_disk, CRITICAL, spec, quad, constant=fitted.quantities["spread"] / 2
        )
        assert not report.passed
        assert report.failed

    def test_constant_map_is_degenerate(self, unit_disk):
        """Test a constant has no energy and no seminorm."""
        report = extension_equivalence_check(
            gallery("constant"), unit_disk, CRITICAL,
            truncation=ExtensionSpec(resolution=16, levels=4), quad=QuadratureSpec(sample_count=16),
        )
        assert report.passed
        assert report.quantities["ratio"] is None
        assert "degenerate" in report.flags


class TestModulus:
    """Test the modulus of continuity bound."""

    def test_pairs(self):
        """Test the nested radius pairs."""
        pairs = modulus_pairs(1.0, 5)
        assert pairs[0] == (0.5, 1.0)
        assert all(r < R <= 1.0 for r, R in pairs)

    def test_constant_map(self, unit_disk):
        """Test a constant satisfies the bound trivially."""
        report = modulus_bound_check(
            gallery("constant"), unit_disk, FractionalParams(s=0.75, p=8 / 3), pair_count=3, M=64,
            quad=QuadratureSpec(sample_count=16),
        )
        assert report.passed
        assert report.quantities["max_ratio"] is None
        assert "monotone" in report.flags

    def test_identity_records_every_pair(self, unit_disk):
        """Test per-pair quantities and a finite ratio for the identity."""
        report = modulus_bound_check(
            gallery("identity"), unit_disk, FractionalParams(s=0.75, p=8 / 3), pair_count=3, M=64,
            quad=QuadratureSpec(sample_count=16),
        )
        assert report.hypothesis_met
        assert {"r_0", "R_2", "osc_1", "seminorm_2", "lhs_0"} <= set(report.quantities)
        assert report.quantities["max_ratio"] > 0
