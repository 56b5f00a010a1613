"""Gagliardo seminorms, circle restrictions, the half-space extension energy and the modulus bound."""
import math
import logging
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import trapezoid
from scipy.signal import fftconvolve

from app.core import (
    check_quadrature,
    grid_spacing,
    monte_carlo_pair_sums,
    parallel_map,
    sample_domain,
    sample_uniform,
    tensor_pair_sums,
)
from app.degree import CircleTrace, circle_trace, image_diameter, monotonicity_variant, oscillation_profile
from app.errors import DimensionError, DomainError, ParameterError, ResolutionError
from app.maps import MapField
from app.schemas.domain_payload import Domain, QuadratureSpec
from app.schemas.report_payload import VerificationReport
from app.schemas.result_payload import FractionalParams, SeminormEstimate

logger = logging.getLogger(__name__)

REGRESSION_SLACK = 0.1
MIN_CIRCLE_SAMPLES = 32
DEGENERATE = 1e-12
# coarsest nodes per axis; coarser grids leave no pairs beyond the exclusion radius
MIN_LEVEL = 8


def refinement_levels(count: int) -> list[int]:
    return [max(MIN_LEVEL, count // 4), max(MIN_LEVEL, count // 2), count]


def extrapolate_cutoff(sums: Sequence[float], cutoffs: Sequence[float], gamma: float) -> float:
    """Remove the leading delta^gamma bias of the diagonal exclusion from two cutoffs."""
    near, far = sums
    w_near, w_far = cutoffs[0] ** gamma, cutoffs[1] ** gamma
    value = (near * w_far - far * w_near) / (w_far - w_near)
    return value if value >= 0 else near


def _tensor_level(f: MapField, domain: Domain, params: FractionalParams, quad: QuadratureSpec, count: int) -> float:
    sample = sample_domain(domain, count)
    weights = sample.weights * (domain.measure() / sample.total_weight)
    keep = ~f.is_singular(sample.points)
    points, weights = sample.points[keep], weights[keep]
    delta = quad.diagonal_exclusion_radius or 2 * grid_spacing(domain, count)
    cutoffs = [delta, 2 * delta]
    sums = tensor_pair_sums(points, f(points), weights, params.p, domain.dim + params.s * params.p, cutoffs)
    return extrapolate_cutoff(sums, cutoffs, params.p * (1 - params.s))


def _monte_carlo_level(
    f: MapField, domain: Domain, params: FractionalParams, quad: QuadratureSpec, count: int, seed
) -> float:
    rng = np.random.default_rng(seed)
    first = sample_uniform(domain, count, rng)
    second = sample_uniform(domain, count, rng)
    keep = ~(f.is_singular(first) | f.is_singular(second))
    first, second = first[keep], second[keep]
    equivalent = max(MIN_LEVEL, round(count ** (1 / (2 * domain.dim))))
    delta = quad.diagonal_exclusion_radius or 2 * grid_spacing(domain, equivalent)
    cutoffs = [delta, 2 * delta]
    sums = monte_carlo_pair_sums(
        first, second, f(first), f(second), domain.measure() ** 2 / count,
        params.p, domain.dim + params.s * params.p, cutoffs,
    )
    return extrapolate_cutoff(sums, cutoffs, params.p * (1 - params.s))


def gagliardo_seminorm(
    f: MapField,
    domain: Domain,
    params: FractionalParams,
    quad: Optional[QuadratureSpec] = None,
    label: Optional[str] = None,
) -> SeminormEstimate:
    """[f]_{W^{s,p}(domain)} at three resolutions; the last one is the value."""
    quad = quad or QuadratureSpec()
    check_quadrature(domain, quad)
    levels = refinement_levels(quad.sample_count)
    if quad.scheme == "tensor-midpoint":
        integrals = [_tensor_level(f, domain, params, quad, count) for count in levels]
    else:
        seeds = np.random.SeedSequence(quad.seed).spawn(len(levels))
        integrals = [
            _monte_carlo_level(f, domain, params, quad, count, seed) for count, seed in zip(levels, seeds)
        ]
    trend = [integral ** (1 / params.p) for integral in integrals]
    logger.debug("seminorm %s s=%g p=%g trend %s", f.label, params.s, params.p, trend)
    return SeminormEstimate(
        label=label or f.label,
        s=params.s,
        p=params.p,
        value=trend[-1],
        refinement_trend=trend,
        scheme=quad,
    )


def circle_seminorm(trace: CircleTrace, params: FractionalParams) -> float:
    """Discrete Gagliardo sum over the circle with geodesic distances and uniform arc weights."""
    M = trace.count
    if M < MIN_CIRCLE_SAMPLES:
        raise ResolutionError(f"circle seminorms need at least {MIN_CIRCLE_SAMPLES} samples, got {M}")
    values = trace.samples
    arc = 2 * math.pi * trace.radius / M
    kernel = 1 + params.s * params.p
    terms = []
    for lag in range(1, M):
        jump = np.linalg.norm(values - np.roll(values, -lag, axis=0), axis=1)
        distance = arc * min(lag, M - lag)
        terms.append(math.fsum(jump ** params.p) / distance ** kernel)
    return (math.fsum(terms) * arc * arc) ** (1 / params.p)


def within_constant(ratio: Optional[float], constant: Optional[float], slack: float = REGRESSION_SLACK) -> bool:
    if ratio is None or constant is None:
        return True
    return ratio <= constant * (1 + slack)


def regression_flags(degenerate: bool, constant: Optional[float]) -> list[str]:
    flags = []
    if degenerate:
        flags.append("degenerate")
    if constant is None:
        flags.append("uncalibrated")
    return flags


def restriction_inequality_check(
    f: MapField,
    ball: Domain,
    params: FractionalParams,
    radii_count: int = 16,
    quad: Optional[QuadratureSpec] = None,
    M: int = 256,
    constant: Optional[float] = None,
) -> VerificationReport:
    """(int_0^R [f]^p_{W^{s,p}(dB(r))} dr)^(1/p) against [f]_{W^{s,p}(B(R))}."""
    if params.trace_order <= 0:
        raise ParameterError(f"restrictions need s - 1/p > 0, got {params.trace_order:g}")
    if radii_count < 8:
        raise ResolutionError("the restriction check needs at least 8 radii")
    radii = np.linspace(0.0, ball.radius, radii_count)

    def restricted(r: float) -> float:
        if r == 0:
            return 0.0
        return circle_seminorm(circle_trace(f, ball.center, r, M), params) ** params.p

    powers = parallel_map(restricted, radii)
    lhs = float(trapezoid(powers, radii)) ** (1 / params.p)
    rhs = gagliardo_seminorm(f, ball, params, quad).value
    degenerate = lhs <= DEGENERATE and rhs <= DEGENERATE
    ratio = None if degenerate or rhs == 0 else lhs / rhs
    return VerificationReport(
        check_id=f"restriction/{f.label}",
        anchor="(int_0^R [f]^p_{W^{s,p}(dB(r))} dr)^(1/p) <~ [f]_{W^{s,p}(B(R))}",
        hypothesis_met=True,
        passed=within_constant(ratio, constant) and (degenerate or ratio is not None),
        quantities={"lhs": lhs, "rhs": rhs, "ratio": ratio, "constant": constant, "s": params.s, "p": params.p},
        flags=regression_flags(degenerate, constant),
    )


class ExtensionSpec(BaseModel):
    """Truncation of the half-space: heights in (grid spacing, height) on a geometric grid."""

    model_config = ConfigDict(frozen=True)

    height: Optional[float] = Field(None, gt=0)
    resolution: int = Field(128, ge=16)
    levels: int = Field(24, ge=4)
    cutoff_radius: float = Field(2.0, gt=0)


def smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity transition from 0 (u <= 0) to 1 (u >= 1)."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        left = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        right = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1 - u, 1.0)), 0.0)
    return left / (left + right)


def cutoff_extension(f: MapField, center: Sequence[float], cutoff_radius: float, points: np.ndarray) -> np.ndarray:
    """f(x0) + (f - f(x0)) chi with chi = 1 on B(x0, R/2) and 0 outside B(x0, R)."""
    center = np.asarray(center, dtype=float)
    base = f.value_at(center)
    rho = np.linalg.norm(points - center, axis=1)
    chi = 1 - smooth_step((rho - cutoff_radius / 2) / (cutoff_radius / 2))
    values = np.broadcast_to(base, (len(points), len(base))).copy()
    active = chi > 0
    if np.any(active):
        values[active] += (f(points[active]) - base) * chi[active, None]
    return values


def box_mass(t: float, half_width: float, n: int) -> float:
    """Mass of the Poisson kernel P_t inside the cube [-half_width, half_width]^n."""
    if n == 1:
        return 2 / math.pi * math.atan(half_width / t)
    if n == 2:
        # solid angle of the square seen from height t, over the full half-space angle 2 pi
        quadrant = math.atan(half_width ** 2 / (t * math.sqrt(2 * half_width ** 2 + t * t)))
        return 2 / math.pi * quadrant
    raise DimensionError(f"the truncated Poisson kernel is available for n <= 2, got n = {n}")


def poisson_kernel(offsets: np.ndarray, t: float, n: int, half_width: float) -> np.ndarray:
    """P_t(x) = t / (|x|^2 + t^2)^((n+1)/2) on the offset box.

    The discrete weights sum to the mass P_t has inside the cube of the given
    half width, not to one.
    """
    kernel = t / (np.sum(offsets * offsets, axis=-1) + t * t) ** ((n + 1) / 2)
    return kernel * (box_mass(t, half_width, n) / kernel.sum())


def halfspace_extension_energy(
    f: MapField,
    params: FractionalParams,
    truncation: Optional[ExtensionSpec] = None,
    center: Sequence[float] = (0.0, 0.0),
) -> float:
    """int int |t^(1 - 1/p - s) DF(x, t)|^p dx dt for the Poisson extension F of the cut-off map."""
    spec = truncation or ExtensionSpec()
    center = np.asarray(center, dtype=float)
    n = len(center)
    half = 1.5 * spec.cutoff_radius
    N = spec.resolution
    h = 2 * half / N
    axis = -half + h * (np.arange(N) + 0.5)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    points = np.stack(grids, axis=-1).reshape(-1, n) + center
    t_min = h
    T = spec.height if spec.height is not None else 2 * spec.cutoff_radius
    if T <= t_min:
        raise DomainError(f"the truncation height {T:g} must exceed the grid spacing {t_min:g}")

    extended = cutoff_extension(f, center, spec.cutoff_radius, points)
    base = f.value_at(center)
    shape = (N,) * n
    fields = [(extended[:, k] - base[k]).reshape(shape) for k in range(extended.shape[1])]
    gradients = [np.gradient(g, h) for g in fields]

    offsets_axis = h * np.arange(-(N - 1), N)
    offsets = np.stack(np.meshgrid(*([offsets_axis] * n), indexing="ij"), axis=-1)
    heights = np.geomspace(t_min, T, spec.levels)

    def level(t: float) -> tuple[np.ndarray, np.ndarray]:
        kernel = poisson_kernel(offsets, t, n, (N - 0.5) * h)
        smoothed = np.stack([fftconvolve(g, kernel, mode="same") for g in fields])
        horizontal = np.stack([fftconvolve(d, kernel, mode="same") for grad in gradients for d in grad])
        return smoothed, horizontal

    levels = parallel_map(level, heights)
    smoothed = np.stack([lv[0] for lv in levels])
    horizontal = np.stack([lv[1] for lv in levels])
    vertical = np.gradient(smoothed, heights, axis=0)
    squared = np.sum(horizontal ** 2, axis=1) + np.sum(vertical ** 2, axis=1)
    density = squared ** (params.p / 2)
    per_height = density.reshape(len(heights), -1).sum(axis=1) * h ** n
    weight = heights ** ((1 - 1 / params.p - params.s) * params.p)
    energy = float(trapezoid(per_height * weight, heights))
    logger.debug("extension energy %s: %g", f.label, energy)
    return energy


def extension_equivalence_check(
    f: MapField,
    ball: Domain,
    params: FractionalParams,
    truncation: Optional[ExtensionSpec] = None,
    quad: Optional[QuadratureSpec] = None,
    constant: Optional[float] = None,
) -> VerificationReport:
    """E^s against [f]^n at p = n/s; the ratio must sit in [1/C, C]."""
    critical = FractionalParams.critical(params.s, params.n)
    energy = halfspace_extension_energy(f, critical, truncation, ball.center)
    seminorm = gagliardo_seminorm(f, ball, critical, quad).value
    degenerate = energy <= DEGENERATE and seminorm <= DEGENERATE
    ratio = None if degenerate or seminorm == 0 else energy ** critical.s / seminorm ** critical.n
    spread = None if not ratio else max(ratio, 1 / ratio)
    return VerificationReport(
        check_id=f"extension/{f.label}",
        anchor="(int |t^(1-s/n-s) DF|^(n/s))^s ~ [f]^n_{W^{s,n/s}}",
        hypothesis_met=True,
        passed=within_constant(spread, constant) and (degenerate or bool(ratio)),
        quantities={"energy": energy, "seminorm": seminorm, "ratio": ratio, "spread": spread, "constant": constant},
        flags=regression_flags(degenerate, constant),
    )


def modulus_pairs(radius: float, count: int) -> list[tuple[float, float]]:
    """(r_k, R_k) with R_k = R (1 - k/(2 count)) and r_k = R_k / (k + 2)."""
    pairs = []
    for k in range(count):
        outer = radius * (1 - 0.5 * k / count)
        pairs.append((outer / (k + 2), outer))
    return pairs


def modulus_bound_check(
    f: MapField,
    ball: Domain,
    params: FractionalParams,
    pair_count: int = 5,
    M: int = 256,
    quad: Optional[QuadratureSpec] = None,
    constant: Optional[float] = None,
) -> VerificationReport:
    """osc(dB(r))^(n/s) log(R/r) <= C [f]^(n/s)_{W^{s,n/s}(B(R))} over nested radius pairs."""
    critical = FractionalParams.critical(params.s, params.n)
    exponent = critical.n / critical.s
    pairs = modulus_pairs(ball.radius, pair_count)

    def evaluate(pair: tuple[float, float]) -> tuple[float, float, float]:
        r, R = pair
        osc = image_diameter(circle_trace(f, ball.center, r, M).samples)
        seminorm = gagliardo_seminorm(f, Domain.ball(ball.center, R), critical, quad).value
        return osc, seminorm, osc ** exponent * math.log(R / r)

    results = parallel_map(evaluate, pairs)
    quantities: dict[str, Optional[float]] = {"s": critical.s, "constant": constant}
    ratios = []
    for k, ((r, R), (osc, seminorm, lhs)) in enumerate(zip(pairs, results)):
        rhs = seminorm ** exponent
        quantities.update({f"r_{k}": r, f"R_{k}": R, f"osc_{k}": osc, f"seminorm_{k}": seminorm, f"lhs_{k}": lhs})
        if rhs > DEGENERATE:
            ratios.append(lhs / rhs)
        elif lhs > DEGENERATE:
            ratios.append(math.inf)
    radii = sorted({r for pair in pairs for r in pair})
    variant = monotonicity_variant(oscillation_profile(f, ball.center, radii, M))
    degenerate = not ratios
    max_ratio = max(ratios) if ratios else None
    quantities["max_ratio"] = max_ratio
    hypothesis_met = variant != "not-monotone"
    flags = [variant, *regression_flags(degenerate, constant), "statement-variable-mismatch"]
    if not hypothesis_met:
        flags.append("hypothesis-not-met")
    return VerificationReport(
        check_id=f"modulus/{f.label}",
        anchor="osc_{dB(r)}(f)^(n/s) <= [f]^(n/s)_{W^{s,n/s}(B(R))} / log(R/r)",
        hypothesis_met=hypothesis_met,
        passed=hypothesis_met and within_constant(max_ratio, constant),
        quantities=quantities,
        flags=flags,
    )
