"""Suite orchestration: every check across the gallery, gated by its hypothesis, ordered by check id."""
import csv
import json
import math
import time
import logging
import threading
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from app.auxfn import check_d_profile, check_pi_profile
from app.calibration import (
    FAMILIES,
    CalibrationConstants,
    ensure_constants,
    run_regression,
    standard_bump,
    unit_disk,
)
from app.core import parallel_map, sample_uniform
from app.degree import (
    circle_trace,
    degree_monotonicity_check,
    degree_nonnegativity_check,
    essential_diameter_check,
    image_diameter,
    monotonicity_variant,
    oscillation_profile,
    sense_preserving_check,
    winding_degree,
)
from app.jacobian import (
    curl_pairing,
    default_family,
    distortion_identity_check,
    jac_pairing,
    sign_classify,
    DISTORTION_TOLERANCE,
)
from app.maps import SMOOTH_GALLERY, MapField, finite_difference_matrices, gallery, jacobian_dets, rotation_distortion
from app.schemas.domain_payload import Domain, QuadratureSpec
from app.schemas.report_payload import REPORT_FIELDS, VerificationReport
from app.schemas.result_payload import FractionalParams, SignClassification
from app.schemas.suite_payload import SuiteConfig
from app.sobolev import REGRESSION_SLACK, gagliardo_seminorm, modulus_bound_check

logger = logging.getLogger(__name__)

ANCHORS = {
    "degree-oracle": "the number of times that f(dB(r)) winds around p",
    "counterexample-nullity": "Jac(f) = det(Df) = 0 while f is discontinuous",
    "auxfn-d-profile": "d(t) + t d'(t) >= 0",
    "auxfn-pi-profile": "pi(t)^(n-1) (pi(t) + t pi'(t)) <= 1",
    "distortion-identity": "Jac(f_delta)[phi] = Jac(f)[phi] + delta^2 int(phi) + delta curl(f)[phi]",
    "degree-monotonicity": "deg(f,B(x,r),p) <= deg(f,B(x,R),p)",
    "degree-nonnegativity": "deg(f,B(x,R),p) >= 0",
    "sense-preserving": "deg(f,B(r),p) >= 1",
    "essential-diameter": "R <= Lambda diam(f(dB(r)))",
    "restriction": "(int_0^R [f]^p_{W^{s,p}(dB(r))} dr)^(1/p) <~ [f]_{W^{s,p}(B(R))}",
    "apriori": "int det(Df) phi <~ [f]^n_{W^{s,n/s}} [phi]_{W^{(1-s)n,1/(1-s)}}",
    "extension": "(int |t^(1-s/n-s) DF|^(n/s))^s ~ [f]^n_{W^{s,n/s}}",
    "modulus": "osc_{dB(r)}(f)^(n/s) <= [f]^(n/s)_{W^{s,n/s}(B(R))} / log(R/r)",
    "hygiene": "det Df_exact - det Df_h = O(h^2); refinement increments shrink; reruns agree",
    "continuity-certificate": "diam f(dB(r)) <= Lambda diam f(dB(rho)) implies a modulus of continuity",
    "curl-free-pathway": "f = lim f_delta enjoys the same continuity estimate",
}

DEGREE_CASES = (
    ("power-1", 1), ("power-2", 2), ("power-3", 3),
    ("power--1", -1), ("power--2", -2), ("power--3", -3),
    ("constant", 0),
)
NULLITY_RADII = (0.5, 0.1, 0.02)
NULLITY_TOLERANCE = 1e-3
DISTORTION_MAPS = ("gradient-quartic", "identity", "rotation-0.2")
DISTORTION_DELTAS = (0.1, 0.3, 1.0)
MONOTONE_MAPS = ("power-2", "gradient-quartic", "conjugation")
SENSE_MAPS = ("power-1", "power-2", "power-3", "conjugation")
DIAMETER_MAPS = ("identity", "power-2", "power-3", "gradient-quartic", "conjugation")
REGRESSION_MAPS = SMOOTH_GALLERY + ("constant",)
FD_MAPS = SMOOTH_GALLERY + ("conjugation",)
FD_STEPS = (1e-3, 5e-4)
FD_FACTOR = 100.0
LIMIT_MAPS = ("power-2", "gradient-quartic")
LIMIT_TOLERANCE = 1e-3
CERTIFICATE_MAPS = ("power-2", "identity", "loglog-counterexample")
PATHWAY_MAPS = ("gradient-quartic", "identity", "rotation-0.2")
PATHWAY_DELTAS = (0.3, 0.1, 0.03)
CERTIFICATE_DISTANCES = (0.4, 0.2, 0.1, 0.05, 0.025)
PROFILE_RADII = tuple(np.linspace(0.1, 0.9, 9))


@dataclass(frozen=True)
class CheckTask:
    check_id: str
    family: str
    run: Callable[[], VerificationReport]


def gated_report(check_id: str, family: str, quantities: dict, flags: Sequence[str] = ()) -> VerificationReport:
    return VerificationReport(
        check_id=check_id,
        anchor=ANCHORS[family],
        hypothesis_met=False,
        passed=False,
        quantities=quantities,
        flags=["hypothesis-not-met", *flags],
    )


def continuity_certificate(
    f: MapField,
    ball: Domain,
    params: FractionalParams,
    constant: Optional[float] = None,
    classification: Optional[SignClassification] = None,
    eps_seq: Sequence[float] = (0.08, 0.04, 0.02),
    quad: Optional[QuadratureSpec] = None,
    M: int = 256,
) -> VerificationReport:
    """Oscillation monotonicity plus the modulus bound give |f(x) - f(y)| <= m(|x - y|) on the ball."""
    check_id = f"continuity-certificate/{f.label}"
    classification = classification or sign_classify(f, ball, None, eps_seq, quad)
    if not classification.is_positive:
        return gated_report(check_id, "continuity-certificate", {"min_pairing": classification.min_pairing}, [classification.verdict])
    critical = FractionalParams.critical(params.s, params.n)
    exponent = critical.n / critical.s
    R = ball.radius
    variant = monotonicity_variant(oscillation_profile(f, ball.center, [R * r for r in PROFILE_RADII], M))
    modulus = modulus_bound_check(f, ball, critical, M=M, quad=quad, constant=constant)
    fitted = constant if constant is not None else (modulus.quantities.get("max_ratio") or 0.0)
    energy = modulus.quantities["seminorm_0"] ** exponent
    quantities: dict[str, Optional[float]] = {
        "constant": fitted,
        "seminorm_power": energy,
        "max_ratio": modulus.quantities.get("max_ratio"),
    }
    moduli = []
    for k, fraction in enumerate(CERTIFICATE_DISTANCES):
        distance = fraction * R
        value = (fitted * energy / math.log(R / distance)) ** (1 / exponent)
        moduli.append(value)
        quantities[f"distance_{k}"] = distance
        quantities[f"modulus_{k}"] = value
    shrinking = all(b <= a for a, b in zip(moduli, moduli[1:]))
    passed = variant != "not-monotone" and modulus.passed and shrinking
    return VerificationReport(
        check_id=check_id,
        anchor=ANCHORS["continuity-certificate"],
        hypothesis_met=True,
        passed=passed,
        quantities=quantities,
        flags=[variant, *[flag for flag in modulus.flags if flag not in (variant,)]],
    )


def curl_free_pathway_check(
    f: MapField,
    deltas: Sequence[float],
    ball: Domain,
    params: FractionalParams,
    constant: Optional[float] = None,
    classification: Optional[SignClassification] = None,
    eps_seq: Sequence[float] = (0.08, 0.04, 0.02),
    quad: Optional[QuadratureSpec] = None,
    M: int = 256,
) -> VerificationReport:
    """Every f_delta = f + delta (-y, x) is positive and continuous with a modulus under the envelope of [f] + |delta| [rotation]."""
    check_id = f"curl-free-pathway/{f.label}"
    family = default_family(ball, f)
    curls = parallel_map(lambda phi: curl_pairing(f, phi, ball, quad), family)
    worst_curl = max(abs(c) / phi.integral() for c, phi in zip(curls, family))
    classification = classification or sign_classify(f, ball, family, eps_seq, quad)
    quantities: dict[str, Optional[float]] = {"max_relative_curl": worst_curl, "min_pairing": classification.min_pairing}
    if worst_curl > NULLITY_TOLERANCE or not classification.is_nonnegative:
        return gated_report(check_id, "curl-free-pathway", quantities, [classification.verdict])

    critical = FractionalParams.critical(params.s, params.n)
    exponent = critical.n / critical.s
    base = gagliardo_seminorm(f, ball, critical, quad).value
    rotation = gagliardo_seminorm(gallery("rotation"), ball, critical, quad).value
    all_positive = all_certified = all_enveloped = True
    moduli = []
    for k, delta in enumerate(deltas):
        distorted = rotation_distortion(f, delta)
        verdict = sign_classify(distorted, ball, family, eps_seq, quad)
        certificate = continuity_certificate(distorted, ball, params, constant, verdict, eps_seq, quad, M)
        first = certificate.quantities.get("modulus_0")
        fitted = certificate.quantities.get("constant") or 0.0
        envelope = (fitted * (base + abs(delta) * rotation) ** exponent / math.log(1 / CERTIFICATE_DISTANCES[0])) ** (1 / exponent)
        all_positive &= verdict.is_positive
        all_certified &= certificate.passed
        enveloped = first is not None and first <= (1 + REGRESSION_SLACK) * envelope
        all_enveloped &= enveloped
        if first is not None:
            moduli.append(first)
        quantities.update({f"delta_{k}": delta, f"modulus_{k}": first, f"envelope_{k}": envelope})
    quantities["max_modulus"] = max(moduli) if moduli else None
    return VerificationReport(
        check_id=check_id,
        anchor=ANCHORS["curl-free-pathway"],
        hypothesis_met=True,
        passed=all_positive and all_certified and all_enveloped,
        quantities=quantities,
    )


class SuiteContext:
    """Shared state of one suite run: the config, fitted constants and cached classifications."""

    def __init__(self, config: SuiteConfig, constants: Optional[CalibrationConstants] = None):
        self.config = config
        self._constants = constants
        self.ball = unit_disk()
        self.params = FractionalParams.critical(config.s, config.n)
        self.quad = QuadratureSpec(sample_count=config.resolution, seed=config.seed)
        self._classifications: dict[str, SignClassification] = {}
        self._lock = threading.Lock()
        self._constants_lock = threading.Lock()

    def classification(self, name: str) -> SignClassification:
        with self._lock:
            if name not in self._classifications:
                self._classifications[name] = sign_classify(
                    gallery(name), self.ball, None, self.config.eps_seq, self.quad
                )
            return self._classifications[name]

    @property
    def constants(self) -> CalibrationConstants:
        with self._constants_lock:
            if self._constants is None:
                self._constants = ensure_constants(self.config)
            return self._constants

    def constant(self, family: str, s: Optional[float] = None) -> float:
        return self.constants.constant(family, self.config.s if s is None else s)


def _maps(ctx: SuiteContext, names: Sequence[str]) -> list[str]:
    return [name for name in names if ctx.config.includes_map(name)]


def degree_oracle(name: str, expected: int, M: int) -> VerificationReport:
    result = winding_degree(circle_trace(gallery(name), (0.0, 0.0), 1.0, M), (0.0, 0.0))
    return VerificationReport(
        check_id=f"degree-oracle/{name}",
        anchor=ANCHORS["degree-oracle"],
        hypothesis_met=True,
        passed=result.degree == expected and result.trusted,
        quantities={
            "degree": result.degree,
            "expected": expected,
            "min_distance": result.min_distance,
            "angle_residual": result.angle_residual,
            "max_increment": result.max_increment,
        },
    )


def counterexample_nullity(ctx: SuiteContext) -> VerificationReport:
    """Null Jacobian pairings for the log-log map together with its unbounded oscillation at 0."""
    f = gallery("loglog-counterexample")
    family = default_family(ctx.ball, f)
    classification = sign_classify(f, ctx.ball, family, ctx.config.eps_seq, ctx.quad)
    tolerance = ctx.config.tolerance("nullity", NULLITY_TOLERANCE)
    relative = [abs(v) / phi.integral() for v, phi in zip(classification.pairings, family)]
    outer = circle_trace(f, ctx.ball.center, ctx.ball.radius, ctx.config.trace_samples).samples
    oscillations = []
    for r in NULLITY_RADII:
        inner = circle_trace(f, ctx.ball.center, r, ctx.config.trace_samples).samples
        oscillations.append(image_diameter(np.concatenate([inner, outer])))
    growing = all(b > a for a, b in zip(oscillations, oscillations[1:]))
    quantities = {"bumps": len(family), "max_relative_pairing": max(relative), "tolerance": tolerance}
    quantities.update({f"osc_r={r:g}": value for r, value in zip(NULLITY_RADII, oscillations)})
    return VerificationReport(
        check_id="counterexample-nullity/loglog-counterexample",
        anchor=ANCHORS["counterexample-nullity"],
        hypothesis_met=True,
        passed=max(relative) < tolerance and growing and classification.verdict == "null",
        quantities=quantities,
        flags=[classification.verdict],
    )


def fd_hygiene(ctx: SuiteContext, name: str) -> VerificationReport:
    f = gallery(name)
    rng = np.random.default_rng(ctx.config.seed)
    points = sample_uniform(ctx.ball, 100, rng)
    exact = jacobian_dets(f, points)
    scale = max(1.0, float(np.max(np.abs(exact))))
    errors = []
    for h in FD_STEPS:
        approx = np.linalg.det(finite_difference_matrices(f, points, h))
        errors.append(float(np.max(np.abs(exact - approx))))
    factor = ctx.config.tolerance("fd", FD_FACTOR)
    bounded = all(err <= factor * h * h * scale for err, h in zip(errors, FD_STEPS))
    order = math.log2(errors[0] / errors[1]) if errors[1] > 0 and errors[0] > 0 else None
    return VerificationReport(
        check_id=f"hygiene/fd-det/{name}",
        anchor=ANCHORS["hygiene"],
        hypothesis_met=True,
        passed=bounded,
        quantities={"error_h": errors[0], "error_h2": errors[1], "observed_order": order, "scale": scale},
    )


def refinement_hygiene(ctx: SuiteContext, name: str) -> VerificationReport:
    f = gallery(name)
    quantities: dict[str, Optional[float]] = {}
    shrinking = True
    for resolution in ctx.config.resolutions:
        trend = gagliardo_seminorm(
            f, ctx.ball, ctx.params, QuadratureSpec(sample_count=resolution, seed=ctx.config.seed)
        ).refinement_trend
        steps = [abs(b - a) for a, b in zip(trend, trend[1:])]
        shrinking &= all(later <= earlier + 1e-12 * trend[-1] for earlier, later in zip(steps, steps[1:]))
        quantities.update({f"N={resolution}_value": trend[-1], f"N={resolution}_first_step": steps[0], f"N={resolution}_last_step": steps[-1]})
    return VerificationReport(
        check_id=f"hygiene/refinement/{name}",
        anchor=ANCHORS["hygiene"],
        hypothesis_met=True,
        passed=shrinking,
        quantities=quantities,
    )


def determinism_hygiene(ctx: SuiteContext) -> VerificationReport:
    f = gallery("identity")
    quantities = {}
    identical = True
    for scheme in ("tensor-midpoint", "monte-carlo"):
        count = ctx.config.resolution if scheme == "tensor-midpoint" else 4096
        quad = QuadratureSpec(scheme=scheme, sample_count=count, seed=ctx.config.seed)
        first = gagliardo_seminorm(f, ctx.ball, ctx.params, quad).value
        second = gagliardo_seminorm(f, ctx.ball, ctx.params, quad).value
        identical &= first == second
        quantities[f"{scheme}_value"] = first
    return VerificationReport(
        check_id="hygiene/determinism/identity",
        anchor=ANCHORS["hygiene"],
        hypothesis_met=True,
        passed=identical,
        quantities=quantities,
    )


def limit_hygiene(ctx: SuiteContext, name: str) -> VerificationReport:
    f = gallery(name)
    phi = standard_bump()
    quantities = {}
    agree = True
    for index, eps_seq in enumerate(ctx.config.eps_sequences):
        result = jac_pairing(f, phi, ctx.ball, eps_seq, ctx.quad)
        gap = abs(result.extrapolated - result.exact_value)
        agree &= gap <= LIMIT_TOLERANCE * abs(result.exact_value)
        quantities.update({f"seq_{index}_extrapolated": result.extrapolated, f"seq_{index}_gap": gap})
    quantities["exact"] = result.exact_value
    return VerificationReport(
        check_id=f"hygiene/pairing-limit/{name}",
        anchor=ANCHORS["hygiene"],
        hypothesis_met=True,
        passed=agree,
        quantities=quantities,
    )


def build_tasks(ctx: SuiteContext) -> list[CheckTask]:
    config = ctx.config
    M = config.trace_samples
    eps = config.eps_seq
    ball = ctx.ball
    tasks: list[CheckTask] = []

    def add(check_id: str, family: str, run: Callable[[], VerificationReport]) -> None:
        if config.selects(family):
            tasks.append(CheckTask(check_id, family, run))

    for name, expected in DEGREE_CASES:
        if config.includes_map(name):
            add(f"degree-oracle/{name}", "degree-oracle", lambda name=name, expected=expected: degree_oracle(name, expected, M))
    if config.includes_map("loglog-counterexample"):
        add("counterexample-nullity/loglog-counterexample", "counterexample-nullity", lambda: counterexample_nullity(ctx))
    add("auxfn-d-profile/c=2", "auxfn-d-profile", lambda: check_d_profile(2.0))
    add(f"auxfn-pi-profile/n={config.n}", "auxfn-pi-profile", lambda: check_pi_profile(n=config.n))

    distortion_tol = config.tolerance("distortion", DISTORTION_TOLERANCE)
    for name in _maps(ctx, DISTORTION_MAPS):
        for delta in DISTORTION_DELTAS:
            add(
                f"distortion-identity/{name}/delta={delta:g}",
                "distortion-identity",
                lambda name=name, delta=delta: distortion_identity_check(
                    gallery(name), delta, standard_bump(), ball, eps, ctx.quad, distortion_tol
                ),
            )

    for name in _maps(ctx, MONOTONE_MAPS):
        add(
            f"degree-monotonicity/{name}",
            "degree-monotonicity",
            lambda name=name: degree_monotonicity_check(
                gallery(name), ball.center, 0.5, 1.0, None, M, ctx.classification(name).verdict
            ),
        )
        add(
            f"degree-nonnegativity/{name}",
            "degree-nonnegativity",
            lambda name=name: degree_nonnegativity_check(
                gallery(name), ball.center, 1.0, None, M, ctx.classification(name).verdict
            ),
        )
    for name in _maps(ctx, SENSE_MAPS):
        add(
            f"sense-preserving/{name}",
            "sense-preserving",
            lambda name=name: sense_preserving_check(gallery(name), ball, None, M, ctx.classification(name).verdict),
        )
    for name in _maps(ctx, DIAMETER_MAPS):
        add(
            f"essential-diameter/{name}",
            "essential-diameter",
            lambda name=name: essential_diameter_check(gallery(name), ball, 128, M, ctx.classification(name).verdict),
        )

    for family in FAMILIES:
        for name in _maps(ctx, REGRESSION_MAPS):
            for s in config.s_values:
                add(
                    f"{family}/{name}/s={s:g}",
                    family,
                    lambda family=family, name=name, s=s: run_regression(
                        family, gallery(name), s, config, ctx.constant(family, s)
                    ),
                )

    for name in _maps(ctx, FD_MAPS):
        add(f"hygiene/fd-det/{name}", "hygiene", lambda name=name: fd_hygiene(ctx, name))
    for name in _maps(ctx, SMOOTH_GALLERY):
        add(f"hygiene/refinement/{name}", "hygiene", lambda name=name: refinement_hygiene(ctx, name))
    for name in _maps(ctx, LIMIT_MAPS):
        add(f"hygiene/pairing-limit/{name}", "hygiene", lambda name=name: limit_hygiene(ctx, name))
    add("hygiene/determinism/identity", "hygiene", lambda: determinism_hygiene(ctx))

    for name in _maps(ctx, CERTIFICATE_MAPS):
        add(
            f"continuity-certificate/{name}",
            "continuity-certificate",
            lambda name=name: continuity_certificate(
                gallery(name), ball, ctx.params, ctx.constant("modulus"), ctx.classification(name), eps, ctx.quad
            ),
        )
    for name in _maps(ctx, PATHWAY_MAPS):
        add(
            f"curl-free-pathway/{name}",
            "curl-free-pathway",
            lambda name=name: curl_free_pathway_check(
                gallery(name), PATHWAY_DELTAS, ball, ctx.params, ctx.constant("modulus"), None, eps, ctx.quad
            ),
        )
    return sorted(tasks, key=lambda task: task.check_id)


def execute(task: CheckTask, record_timing: bool) -> VerificationReport:
    """Run one check; an exception becomes a failed report instead of aborting the suite."""
    start = time.perf_counter()
    try:
        report = task.run()
    except Exception as error:
        logger.exception("check %s raised", task.check_id)
        report = VerificationReport(
            check_id=task.check_id,
            anchor=ANCHORS[task.family],
            hypothesis_met=True,
            passed=False,
            flags=["error", type(error).__name__],
        )
    elapsed = (time.perf_counter() - start) * 1000 if record_timing else 0.0
    return report.model_copy(update={"check_id": task.check_id, "runtime_ms": elapsed})


def run_suite(
    config: SuiteConfig,
    constants: Optional[CalibrationConstants] = None,
    selector: Optional[str] = None,
) -> list[VerificationReport]:
    """All selected checks, ordered by check id. ``selector`` keeps one family or one check id."""
    ctx = SuiteContext(config, constants)
    tasks = build_tasks(ctx)
    if selector is not None:
        tasks = [
            task for task in tasks
            if task.family == selector or task.check_id == selector or task.check_id.startswith(selector + "/")
        ]
    logger.info("running %d checks", len(tasks))
    return parallel_map(lambda task: execute(task, config.record_timing), tasks)


def reports_to_json(reports: Sequence[VerificationReport]) -> str:
    return json.dumps([report.to_record() for report in reports], indent=2, sort_keys=True)


def write_summary_csv(reports: Sequence[VerificationReport], handle) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    for report in reports:
        writer.writerow(report.to_row())


def suite_failed(reports: Sequence[VerificationReport]) -> bool:
    return any(report.failed for report in reports)
