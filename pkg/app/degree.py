"""Circle traces, winding numbers and the degree-based checks (planar only)."""
import math
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.distance import pdist

from app.auxfn import RadialProfile, detW
from app.core import parallel_map, sample_circle, sample_domain
from app.errors import DegreeUndefinedError, DimensionError, ResolutionError, SingularPointError
from app.maps import MapField, jacobian_dets
from app.schemas.domain_payload import Domain, GridSpec
from app.schemas.report_payload import VerificationReport
from app.schemas.result_payload import DegreeResult

logger = logging.getLogger(__name__)

MIN_TRACE_SAMPLES = 32
PROBE_GRID = 7
PROBE_MARGIN = 0.02
# admissible probes a default-grid degree check needs before it can pass
MIN_ADMISSIBLE = 40
# diameter bound witnessed by the proof's construction, and its doubled form used for the check
WITNESS_FACTOR = 20.0
DIAMETER_FACTOR = 2 * WITNESS_FACTOR
MONOTONE_FACTOR = 40.0
# clouds up to this size use all pairwise distances
PDIST_LIMIT = 2048

NONNEGATIVE_VERDICTS = ("nonnegative-evidence", "positive-evidence")


@dataclass(frozen=True)
class CircleTrace:
    """Values of a map at M equispaced angles on the circle, counterclockwise from angle 0."""

    center: tuple[float, float]
    radius: float
    samples: np.ndarray = field(repr=False)
    map_label: str = "map"

    def __post_init__(self):
        if len(self.samples) < MIN_TRACE_SAMPLES:
            raise ResolutionError(f"a trace needs at least {MIN_TRACE_SAMPLES} samples, got {len(self.samples)}")

    @property
    def count(self) -> int:
        return len(self.samples)

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.count) / self.count

    def translated(self, shift: Sequence[float]) -> "CircleTrace":
        return CircleTrace(self.center, self.radius, self.samples + np.asarray(shift, dtype=float), self.map_label)

    def to_csv(self, target) -> None:
        columns = np.column_stack([self.angles, self.samples])
        header = ",".join(["angle"] + [f"f{i + 1}" for i in range(self.samples.shape[1])])
        np.savetxt(target, columns, delimiter=",", header=header, comments="", fmt="%.17g")


def circle_trace(f: MapField, center: Sequence[float], r: float, M: int = 512) -> CircleTrace:
    points = sample_circle(center, r, M)
    if np.any(f.is_singular(points)):
        raise SingularPointError(f"the circle of radius {r:g} passes through a singular point of {f.label}")
    values = np.asarray(f(points), dtype=float).reshape(len(points), -1)
    return CircleTrace(tuple(float(c) for c in center), float(r), values, f.label)


def image_diameter(values: np.ndarray) -> float:
    """Largest pairwise distance of a point cloud."""
    values = np.asarray(values, dtype=float).reshape(len(values), -1)
    if len(values) < 2:
        return 0.0
    if values.shape[1] == 1:
        return float(values.max() - values.min())
    if len(values) > PDIST_LIMIT:
        try:
            values = values[ConvexHull(values).vertices]
        except QhullError:
            # flat cloud: its extent along the principal axis is the diameter
            centered = values - values.mean(axis=0)
            axis = np.linalg.svd(centered, full_matrices=False)[2][0]
            projected = centered @ axis
            return float(projected.max() - projected.min())
    return float(pdist(values).max())


def winding_degree(trace: CircleTrace, p: Sequence[float]) -> DegreeResult:
    """Degree of the trace around p from the summed signed angle increments."""
    if trace.samples.shape[1] != 2:
        raise DimensionError("winding numbers are computed for planar traces only")
    offsets = trace.samples - np.asarray(p, dtype=float)
    distances = np.linalg.norm(offsets, axis=1)
    min_distance = float(distances.min())
    if min_distance <= 1e-14:
        raise DegreeUndefinedError(f"p = {tuple(p)} lies on the boundary image of {trace.map_label}")
    z = offsets[:, 0] + 1j * offsets[:, 1]
    increments = np.angle(np.roll(z, -1) / z)
    total = math.fsum(increments)
    degree = int(round(total / (2 * math.pi)))
    residual = abs(total - 2 * math.pi * degree)
    max_increment = float(np.max(np.abs(increments)))
    trusted = max_increment < math.pi / 2 and residual < math.pi / 4
    if not trusted:
        logger.warning(
            "untrusted degree for %s around %s: max increment %.3f, residual %.3g",
            trace.map_label, tuple(p), max_increment, residual,
        )
    return DegreeResult(
        degree=degree,
        min_distance=min_distance,
        angle_residual=residual,
        max_increment=max_increment,
        trusted=trusted,
    )


def probe_grid(trace: CircleTrace, count: int = PROBE_GRID) -> np.ndarray:
    """A count x count grid spanning the bounding box of the boundary image."""
    lower = trace.samples.min(axis=0)
    upper = trace.samples.max(axis=0)
    axes = [np.linspace(lower[i], upper[i], count) for i in range(2)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)


def oscillation_profile(f: MapField, x0: Sequence[float], radii: Sequence[float], M: int = 512) -> list[tuple[float, float]]:
    """(r, diameter of f(dB(x0, r))) for increasing radii."""
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ResolutionError("radii must be strictly increasing")
    return [(r, image_diameter(circle_trace(f, x0, r, M).samples)) for r in radii]


def monotonicity_variant(profile: list[tuple[float, float]], factor: float = MONOTONE_FACTOR) -> str:
    """monotone, lambda-monotone (osc on smaller circles <= factor * osc on larger ones) or not-monotone."""
    osc = [value for _, value in profile]
    pairs = [(osc[i], osc[j]) for i in range(len(osc)) for j in range(i + 1, len(osc))]
    slack = 1e-12 * max(osc, default=0.0)
    if all(small <= large + slack for small, large in pairs):
        return "monotone"
    if all(small <= factor * large + slack for small, large in pairs):
        return "lambda-monotone"
    return "not-monotone"


def _gate(verdict: Optional[str]) -> bool:
    return verdict in NONNEGATIVE_VERDICTS


def _gated_flags(hypothesis_met: bool) -> list[str]:
    return [] if hypothesis_met else ["hypothesis-not-met"]


def _probes(trace: CircleTrace, probe_points) -> np.ndarray:
    if probe_points is None:
        return probe_grid(trace)
    return np.atleast_2d(np.asarray(probe_points, dtype=float))


def _required_probes(probe_points, min_admissible: Optional[int]) -> int:
    if min_admissible is not None:
        return min_admissible
    return MIN_ADMISSIBLE if probe_points is None else 1


def _nearest(trace: CircleTrace, p: np.ndarray) -> float:
    return float(np.min(np.linalg.norm(trace.samples - p, axis=1)))


def w_field_integral(f: MapField, domain: Domain, p: Sequence[float], c: float, count: int = 64) -> float:
    """Integral of det(Df) det W(f - p) with W built from the d_c profile."""
    sample = sample_domain(domain, count)
    if len(sample.points) == 0:
        return 0.0
    keep = ~f.is_singular(sample.points)
    points, weights = sample.points[keep], sample.weights[keep]
    weight = detW(RadialProfile(kind="d-profile", scale=c), f(points) - np.asarray(p, dtype=float))
    return math.fsum(weights * jacobian_dets(f, points) * weight)


def degree_monotonicity_check(
    f: MapField,
    x0: Sequence[float],
    r: float,
    R: float,
    probe_points=None,
    M: int = 512,
    verdict: Optional[str] = None,
    min_admissible: Optional[int] = None,
) -> VerificationReport:
    """deg(f, B(x0, r), p) <= deg(f, B(x0, R), p) at probes away from both boundary images."""
    if not r < R:
        raise ResolutionError("monotonicity needs r < R")
    inner = circle_trace(f, x0, r, M)
    outer = circle_trace(f, x0, R, M)
    rho = image_diameter(outer.samples)
    margin = PROBE_MARGIN * rho
    probes = _probes(outer, probe_points)

    def evaluate(p: np.ndarray):
        if _nearest(inner, p) <= margin or _nearest(outer, p) <= margin:
            return None
        return winding_degree(inner, p), winding_degree(outer, p)

    results = parallel_map(evaluate, probes)
    quantities: dict[str, float] = {"r": r, "R": R, "rho_bd": rho, "margin": margin}
    admissible = violations = untrusted = 0
    for index, result in enumerate(results):
        if result is None:
            continue
        small, large = result
        admissible += 1
        violations += int(small.degree > large.degree)
        untrusted += int(not (small.trusted and large.trusted))
        quantities[f"probe_{index}_deg_r"] = small.degree
        quantities[f"probe_{index}_deg_R"] = large.degree
    skipped = len(probes) - admissible
    required = _required_probes(probe_points, min_admissible)
    quantities.update({"admissible": admissible, "min_admissible": required, "violations": violations, "untrusted": untrusted})
    center_image = f.value_at(x0)
    if rho > 0 and not f.is_singular(np.asarray(x0, dtype=float)[None, :])[0]:
        annulus = Domain.annulus(x0, r, R)
        quantities["w_field_integral"] = w_field_integral(f, annulus, center_image, rho)
    hypothesis_met = _gate(verdict)
    passed = hypothesis_met and admissible >= required and violations == 0 and untrusted == 0
    logger.info("degree monotonicity %s: %d admissible, %d violations", f.label, admissible, violations)
    return VerificationReport(
        check_id=f"degree-monotonicity/{f.label}",
        anchor="deg(f,B(x,r),p) <= deg(f,B(x,R),p)",
        hypothesis_met=hypothesis_met,
        passed=passed,
        quantities=quantities,
        skipped_probes=skipped,
        flags=_gated_flags(hypothesis_met),
    )


def degree_nonnegativity_check(
    f: MapField,
    x0: Sequence[float],
    R: float,
    probe_points=None,
    M: int = 512,
    verdict: Optional[str] = None,
    min_admissible: Optional[int] = None,
) -> VerificationReport:
    trace = circle_trace(f, x0, R, M)
    rho = image_diameter(trace.samples)
    margin = PROBE_MARGIN * rho
    probes = _probes(trace, probe_points)

    def evaluate(p: np.ndarray):
        if _nearest(trace, p) <= margin:
            return None
        return winding_degree(trace, p)

    results = parallel_map(evaluate, probes)
    quantities: dict[str, float] = {"R": R, "rho_bd": rho, "margin": margin}
    admissible = violations = untrusted = 0
    lowest = None
    for index, result in enumerate(results):
        if result is None:
            continue
        admissible += 1
        violations += int(result.degree < 0)
        untrusted += int(not result.trusted)
        lowest = result.degree if lowest is None else min(lowest, result.degree)
        quantities[f"probe_{index}_deg"] = result.degree
    required = _required_probes(probe_points, min_admissible)
    quantities.update(
        {"admissible": admissible, "min_admissible": required, "violations": violations, "untrusted": untrusted, "min_degree": lowest}
    )
    hypothesis_met = _gate(verdict)
    passed = hypothesis_met and admissible >= required and violations == 0 and untrusted == 0
    return VerificationReport(
        check_id=f"degree-nonnegativity/{f.label}",
        anchor="deg(f,B(x,R),p) >= 0",
        hypothesis_met=hypothesis_met,
        passed=passed,
        quantities=quantities,
        skipped_probes=len(probes) - admissible,
        flags=_gated_flags(hypothesis_met),
    )


def sense_preserving_check(
    f: MapField,
    ball: Domain,
    probe_points=None,
    M: int = 512,
    verdict: Optional[str] = None,
    interior_grid: GridSpec | int = 128,
) -> VerificationReport:
    """deg(f, B, p) >= 1 for probes in f(B) away from f(dB)."""
    if ball.dim != 2:
        raise DimensionError("sense preservation is checked in the plane only")
    trace = circle_trace(f, ball.center, ball.radius, M)
    rho = image_diameter(trace.samples)
    margin = PROBE_MARGIN * rho
    probes = _probes(trace, probe_points)
    interior = sample_domain(ball, interior_grid).points
    interior = interior[~f.is_singular(interior)]
    tree = cKDTree(f(interior))

    def evaluate(p: np.ndarray):
        if _nearest(trace, p) <= margin:
            return "boundary"
        if tree.query(p)[0] > margin:
            return "outside"
        return winding_degree(trace, p)

    results = parallel_map(evaluate, probes)
    quantities: dict[str, float] = {"radius": ball.radius, "rho_bd": rho, "margin": margin}
    admissible = violations = untrusted = outside = 0
    for index, result in enumerate(results):
        if result == "outside":
            outside += 1
            continue
        if isinstance(result, str):
            continue
        admissible += 1
        violations += int(result.degree < 1)
        untrusted += int(not result.trusted)
        quantities[f"probe_{index}_deg"] = result.degree
    quantities.update({"admissible": admissible, "violations": violations, "untrusted": untrusted, "outside_image": outside})
    hypothesis_met = verdict == "positive-evidence"
    passed = hypothesis_met and admissible > 0 and violations == 0 and untrusted == 0
    return VerificationReport(
        check_id=f"sense-preserving/{f.label}",
        anchor="deg(f,B(r),p) >= 1",
        hypothesis_met=hypothesis_met,
        passed=passed,
        quantities=quantities,
        skipped_probes=len(probes) - admissible,
        flags=_gated_flags(hypothesis_met),
    )


def essential_diameter_check(
    f: MapField,
    ball: Domain,
    interior_grid: GridSpec | int = 128,
    M: int = 512,
    verdict: Optional[str] = None,
) -> VerificationReport:
    """diam f(B) <= 40 diam f(dB), ignoring declared singular points."""
    trace = circle_trace(f, ball.center, ball.radius, M)
    rho_bd = image_diameter(trace.samples)
    interior = sample_domain(ball, interior_grid).points
    interior = interior[~f.is_singular(interior)]
    values = f(interior)
    rho_in = image_diameter(values)
    anchor_point = trace.samples[0]
    escaped = int(np.count_nonzero(np.linalg.norm(values - anchor_point, axis=1) > WITNESS_FACTOR * rho_bd))
    ratio = rho_in / rho_bd if rho_bd > 0 else None
    hypothesis_met = verdict == "positive-evidence"
    holds = rho_in <= DIAMETER_FACTOR * rho_bd and escaped == 0
    flags = _gated_flags(hypothesis_met)
    if rho_bd == 0:
        flags.append("degenerate")
    return VerificationReport(
        check_id=f"essential-diameter/{f.label}",
        anchor="R <= Lambda diam(f(dB(r)))",
        hypothesis_met=hypothesis_met,
        passed=hypothesis_met and holds,
        quantities={
            "rho_bd": rho_bd,
            "rho_in": rho_in,
            "ratio": ratio,
            "bound": DIAMETER_FACTOR,
            "witness_escapes": escaped,
        },
        flags=flags,
    )
