"""Distributional Jacobian and curl pairings against smooth bumps."""
import math
import logging
from typing import Optional, Sequence

import numpy as np

from app.core import ball_quadrature, parallel_map
from app.errors import DimensionError, DomainError, ParameterError, ResolutionError
from app.maps import MapField, MollifierSpec, TestFunction, jacobian_dets, mollify, rotation_distortion, sup_scale
from app.schemas.domain_payload import Domain, QuadratureSpec
from app.schemas.report_payload import VerificationReport
from app.schemas.result_payload import FractionalParams, PairingResult, SignClassification
from app.sobolev import DEGENERATE, gagliardo_seminorm, within_constant, regression_flags

logger = logging.getLogger(__name__)

DEFAULT_EPSILONS = (0.08, 0.04, 0.02)
RELATIVE_TOLERANCE = 1e-6
DISTORTION_TOLERANCE = 1e-3
FAMILY_SIZE = 5
FAMILY_RADIUS = 0.15
FD_STEP = 1e-5


def pairing_tolerance(f: MapField, phi: TestFunction, points: Optional[np.ndarray] = None) -> float:
    """1e-6 * int(phi) * max(1, sup |f| over the support)."""
    if points is None:
        points = ball_quadrature(phi.center, phi.radius, 16).points
    scale = max(1.0, sup_scale(f, points)) if len(points) else 1.0
    return RELATIVE_TOLERANCE * phi.integral() * scale


def _check_support(phi: TestFunction, domain: Domain) -> float:
    margin = domain.margin(phi.center, phi.radius)
    if margin <= 0:
        raise DomainError(f"the support of the bump at {phi.center} is not compactly inside the domain")
    return margin


def _check_epsilons(eps_seq: Sequence[float]) -> list[float]:
    eps_seq = [float(e) for e in eps_seq]
    if len(eps_seq) < 3:
        raise ResolutionError("a pairing trend needs at least 3 mollification scales")
    if any(b >= a for a, b in zip(eps_seq, eps_seq[1:])):
        raise ResolutionError("mollification scales must be strictly decreasing")
    return eps_seq


def jac_pairing(
    f: MapField,
    phi: TestFunction,
    domain: Domain,
    eps_seq: Sequence[float] = DEFAULT_EPSILONS,
    quad: Optional[QuadratureSpec] = None,
    kernel_sample_count: int = 16,
) -> PairingResult:
    """int det(D(f * eta_eps)) phi for each eps, by interior quadrature over the support of phi."""
    quad = quad or QuadratureSpec()
    eps_seq = _check_epsilons(eps_seq)
    _check_support(phi, domain)
    nodes = ball_quadrature(phi.center, phi.radius, quad.sample_count)
    weighted = nodes.weights * phi.evaluate(nodes.points)
    region = (phi.center, phi.radius)

    def at_scale(eps: float) -> float:
        smoothed = mollify(f, MollifierSpec(epsilon=eps, kernel_sample_count=kernel_sample_count), region, domain)
        return math.fsum(weighted * jacobian_dets(smoothed, nodes.points, FD_STEP))

    values = parallel_map(at_scale, eps_seq)
    trend = list(zip(eps_seq, values))
    tol = pairing_tolerance(f, phi, nodes.points)
    exact = None
    if f.smoothness_hint == "smooth" and f.differential is not None:
        exact = math.fsum(weighted * jacobian_dets(f, nodes.points))
    coarse, fine = trend[-2], trend[-1]
    ratio = (coarse[0] / fine[0]) ** 2
    extrapolated = (ratio * fine[1] - coarse[1]) / (ratio - 1)
    converged = abs(fine[1] - coarse[1]) < tol
    logger.debug("Jac(%s) trend %s", f.label, values)
    return PairingResult(
        value=fine[1],
        epsilon_trend=trend,
        converged=converged,
        tolerance=tol,
        exact_value=exact,
        extrapolated=extrapolated,
    )


def default_family(domain: Domain, f: Optional[MapField] = None) -> list[TestFunction]:
    """5 x 5 bumps of radius 0.15 R; a polar layout when f is singular at the center."""
    center = np.asarray(domain.center, dtype=float)
    if domain.dim != 2:
        raise DimensionError("the default family is planar")
    R = domain.radius
    radius = FAMILY_RADIUS * R
    singular_center = f is not None and any(
        np.linalg.norm(np.asarray(p) - center) < radius for p in f.singular_points
    )
    centers = []
    if singular_center:
        for ring, rho in enumerate(np.linspace(0.25 * R, 0.65 * R, FAMILY_SIZE)):
            for k in range(FAMILY_SIZE):
                angle = 2 * math.pi * k / FAMILY_SIZE + ring * math.pi / FAMILY_SIZE
                centers.append(center + rho * np.array([math.cos(angle), math.sin(angle)]))
    else:
        offsets = np.linspace(-R / 2, R / 2, FAMILY_SIZE)
        centers = [center + np.array([a, b]) for a in offsets for b in offsets]
    return [TestFunction(center=tuple(float(c) for c in point), radius=radius) for point in centers]


def sign_classify(
    f: MapField,
    domain: Domain,
    family: Optional[Sequence[TestFunction]] = None,
    eps_seq: Sequence[float] = DEFAULT_EPSILONS,
    quad: Optional[QuadratureSpec] = None,
) -> SignClassification:
    """Evidence for Jac(f) >= 0 or Jac(f) > 0 over a finite family of bumps."""
    family = list(family) if family is not None else default_family(domain, f)
    if not family:
        raise ResolutionError("the test family is empty")
    results = parallel_map(lambda phi: jac_pairing(f, phi, domain, eps_seq, quad), family)
    pairings = [result.value for result in results]
    tols = [result.tolerance for result in results]
    if all(abs(v) <= tol for v, tol in zip(pairings, tols)):
        verdict = "null"
    elif all(v >= tol for v, tol in zip(pairings, tols)):
        verdict = "positive-evidence"
    elif all(v >= -tol for v, tol in zip(pairings, tols)):
        verdict = "nonnegative-evidence"
    else:
        verdict = "sign-changing"
    index = int(np.argmin(pairings))
    logger.info("sign classification of %s: %s", f.label, verdict)
    return SignClassification(
        verdict=verdict,
        min_pairing=pairings[index],
        witness=family[index],
        pairings=pairings,
        tolerance=max(tols),
    )


def curl_pairing(f: MapField, phi: TestFunction, domain: Domain, quad: Optional[QuadratureSpec] = None) -> float:
    """curl(f)[phi] = -int (f2 d1 phi - f1 d2 phi)."""
    if domain.dim != 2 or phi.dim != 2:
        raise DimensionError("the curl pairing is planar")
    quad = quad or QuadratureSpec()
    _check_support(phi, domain)
    nodes = ball_quadrature(phi.center, phi.radius, quad.sample_count)
    values = f(nodes.points)
    grad = phi.gradient(nodes.points)
    integrand = values[:, 1] * grad[:, 0] - values[:, 0] * grad[:, 1]
    return -math.fsum(nodes.weights * integrand)


def distortion_identity_check(
    f: MapField,
    delta: float,
    phi: TestFunction,
    domain: Domain,
    eps_seq: Sequence[float] = DEFAULT_EPSILONS,
    quad: Optional[QuadratureSpec] = None,
    relative_tolerance: float = DISTORTION_TOLERANCE,
) -> VerificationReport:
    """Jac(f + delta R)[phi] = Jac(f)[phi] + delta^2 int(phi) + delta curl(f)[phi] for the rotation R."""
    if delta == 0:
        raise ParameterError("the distortion needs delta != 0")
    distorted = jac_pairing(rotation_distortion(f, delta), phi, domain, eps_seq, quad).value
    base = jac_pairing(f, phi, domain, eps_seq, quad).value
    mass = phi.integral()
    curl = curl_pairing(f, phi, domain, quad)
    residual = distorted - base - delta * delta * mass - delta * curl
    bound = relative_tolerance * mass
    return VerificationReport(
        check_id=f"distortion-identity/{f.label}/delta={delta:g}",
        anchor="Jac(f_delta)[phi] = Jac(f)[phi] + delta^2 int(phi) + delta curl(f)[phi]",
        hypothesis_met=True,
        passed=abs(residual) < bound,
        quantities={
            "delta": delta,
            "jac_distorted": distorted,
            "jac_base": base,
            "phi_integral": mass,
            "curl": curl,
            "residual": residual,
            "bound": bound,
        },
    )


def bump_space_params(s: float, n: int) -> FractionalParams:
    """W^{(1-s)n, 1/(1-s)}, the space the bumps are measured in."""
    return FractionalParams(s=(1 - s) * n, p=1 / (1 - s), n=n)


def apriori_bound_check(
    f: MapField,
    phi: TestFunction,
    s: float,
    domain: Domain,
    eps_seq: Sequence[float] = DEFAULT_EPSILONS,
    quad: Optional[QuadratureSpec] = None,
    constant: Optional[float] = None,
) -> VerificationReport:
    """|Jac(f)[phi]| <~ [f]^n_{W^{s,n/s}} [phi]_{W^{(1-s)n,1/(1-s)}}."""
    n = domain.dim
    lower = max((n - 1) / n, n / (n + 1))
    if not lower < s < 1:
        raise ParameterError(f"the a priori bound needs {lower:g} < s < 1, got {s:g}")
    pairing = jac_pairing(f, phi, domain, eps_seq, quad).value
    f_norm = gagliardo_seminorm(f, domain, FractionalParams.critical(s, n), quad).value ** n
    phi_norm = gagliardo_seminorm(phi.as_field(), domain, bump_space_params(s, n), quad).value
    product = f_norm * phi_norm
    degenerate = abs(pairing) <= DEGENERATE * max(1.0, phi.integral()) and product <= DEGENERATE
    ratio = None if degenerate or product == 0 else abs(pairing) / product
    return VerificationReport(
        check_id=f"apriori/{f.label}",
        anchor="int det(Df) phi <~ [f]^n_{W^{s,n/s}} [phi]_{W^{(1-s)n,1/(1-s)}}",
        hypothesis_met=True,
        passed=within_constant(ratio, constant) and (degenerate or ratio is not None),
        quantities={
            "pairing": pairing,
            "f_seminorm_power": f_norm,
            "phi_seminorm": phi_norm,
            "ratio": ratio,
            "constant": constant,
            "s": s,
        },
        flags=[*regression_flags(degenerate, constant), "test-space-exponent"],
    )
