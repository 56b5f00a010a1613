"""Radial profiles d_c and pi_lambda and the matrix field W(v) built from them.

d (the c = 2 profile):
    5/4            on [0, 1/2]
    -t^2 + t + 1   on [1/2, 1]
    1/t            on [1, inf)
and d_c(t) = d(t / k) / k with k = c/2, so that d_c(t) = 1/t for t >= c/2.

pi (lambda = 1) is defined through r(t) = t^n pi(t)^n:
    r = t^n          on [0, 1]
    r = t^n - a(t)   on (1, 2),   a(1 + u) = 2.5 u^2 - 1.5 u^3
    r = t^n - t/2    on [2, inf)
and pi_lambda(t) = pi(t / lambda).
"""
import logging
from typing import Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.schemas.report_payload import VerificationReport

logger = logging.getLogger(__name__)

ProfileKind = Literal["d-profile", "pi-profile"]

SEAM_TOLERANCE = 1e-12


class RadialProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ProfileKind
    scale: float = Field(..., gt=0)
    n: int = Field(2, ge=2)


class SeamGap(NamedTuple):
    kind: str
    point: float
    value_gap: float
    derivative_gap: float


# base branches as (value, derivative) pairs, left to right
D_SEAMS = (0.5, 1.0)
D_BRANCHES = (
    (lambda t: np.full_like(t, 1.25), lambda t: np.zeros_like(t)),
    (lambda t: -t * t + t + 1, lambda t: -2 * t + 1),
    (lambda t: 1 / t, lambda t: -1 / (t * t)),
)

R_SEAMS = (1.0, 2.0)


def hermite_cubic(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """a on [1, 2] with a(1) = a'(1) = 0, a(2) = 1, a'(2) = 1/2."""
    u = t - 1
    return 2.5 * u ** 2 - 1.5 * u ** 3, 5 * u - 4.5 * u ** 2


def r_branches(n: int):
    return (
        (lambda t: t ** n, lambda t: n * t ** (n - 1)),
        (lambda t: t ** n - hermite_cubic(t)[0], lambda t: n * t ** (n - 1) - hermite_cubic(t)[1]),
        (lambda t: t ** n - t / 2, lambda t: n * t ** (n - 1) - 0.5),
    )


def _piecewise(t: np.ndarray, seams, branches) -> tuple[np.ndarray, np.ndarray]:
    index = np.searchsorted(np.asarray(seams), t, side="left")
    value = np.empty_like(t)
    slope = np.empty_like(t)
    for k, (fn, dfn) in enumerate(branches):
        mask = index == k
        if np.any(mask):
            value[mask] = fn(t[mask])
            slope[mask] = dfn(t[mask])
    return value, slope


def _checked(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("profiles are defined for t >= 0")
    return t


def _unwrap(t, value: np.ndarray, slope: np.ndarray):
    if np.ndim(t) == 0:
        return float(value[0]), float(slope[0])
    return value, slope


def d_profile(c: float, t) -> tuple[np.ndarray, np.ndarray]:
    if c <= 0:
        raise ValueError("c must be positive")
    kappa = c / 2
    t = np.atleast_1d(_checked(t))
    value, slope = _piecewise(t / kappa, D_SEAMS, D_BRANCHES)
    return value / kappa, slope / kappa ** 2


def d_eval(c: float, t):
    """(d_c(t), d_c'(t)); scalars in, scalars out."""
    value, slope = d_profile(c, t)
    return _unwrap(t, value, slope)


def pi_profile(lam: float, n: int, t) -> tuple[np.ndarray, np.ndarray]:
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if n < 2:
        raise ValueError("n must be at least 2")
    u = np.atleast_1d(_checked(t)) / lam
    r, dr = _piecewise(u, R_SEAMS, r_branches(n))
    value = np.ones_like(u)
    slope = np.zeros_like(u)
    outer = u > 1
    root = r[outer] ** (1 / n)
    value[outer] = root / u[outer]
    slope[outer] = r[outer] ** (1 / n - 1) * dr[outer] / (n * u[outer]) - root / u[outer] ** 2
    return value, slope / lam


def pi_eval(lam: float, n: int, t):
    """(pi_lambda(t), pi_lambda'(t)); pi'(0) = 0 by the constant branch."""
    value, slope = pi_profile(lam, n, t)
    return _unwrap(t, value, slope)


def profile_eval(profile: RadialProfile, t) -> tuple[np.ndarray, np.ndarray]:
    if profile.kind == "d-profile":
        return d_profile(profile.scale, t)
    return pi_profile(profile.scale, profile.n, t)


def W_matrix(profile: RadialProfile, v) -> np.ndarray:
    """g(|v|) I + g'(|v|)/|v| v (x) v for the radial profile g; g(0) I at v = 0."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    value, slope = profile_eval(profile, norm)
    matrix = value[0] * np.eye(len(v))
    if norm > 0:
        matrix += (slope[0] / norm) * np.outer(v, v)
    return matrix


def detW(profile: RadialProfile, v) -> np.ndarray | float:
    """g^{n-1} (g + g' |v|) with n = len(v); accepts one vector or an (m, n) stack."""
    v = np.asarray(v, dtype=float)
    stack = np.atleast_2d(v)
    norm = np.linalg.norm(stack, axis=1)
    value, slope = profile_eval(profile, norm)
    det = value ** (stack.shape[1] - 1) * (value + slope * norm)
    return float(det[0]) if v.ndim == 1 else det


def seam_report(kind: ProfileKind, n: int = 2) -> list[SeamGap]:
    """Value and derivative jumps of the base branches at their seams."""
    if kind == "d-profile":
        seams, branches = D_SEAMS, D_BRANCHES
    else:
        seams, branches = R_SEAMS, r_branches(n)
    gaps = []
    for k, point in enumerate(seams):
        t = np.array([point])
        left, right = branches[k], branches[k + 1]
        gaps.append(
            SeamGap(
                kind=kind,
                point=point,
                value_gap=float(abs(left[0](t) - right[0](t))[0]),
                derivative_gap=float(abs(left[1](t) - right[1](t))[0]),
            )
        )
    return gaps


def check_d_profile(c: float = 2.0, grid_count: int = 10_000) -> VerificationReport:
    t = np.linspace(0, 10 * c, grid_count)
    d, dd = d_profile(c, t)
    combo = d + t * dd
    tail = t > c / 2
    head = t <= c / 4
    gaps = seam_report("d-profile")
    violations = {
        "positivity": int(np.count_nonzero(d <= 0)),
        "combination": int(np.count_nonzero(combo < -SEAM_TOLERANCE)),
        "reciprocal_tail": int(np.count_nonzero(np.abs(d[tail] - 1 / t[tail]) > SEAM_TOLERANCE * np.maximum(1, 1 / t[tail]))),
        "constant_head": int(np.count_nonzero(d[head] != d[0])),
        "strict_head": int(np.count_nonzero(combo[head] <= 0)),
    }
    seam_gap = max(max(g.value_gap, g.derivative_gap) for g in gaps)
    quantities = {f"violations_{name}": float(count) for name, count in violations.items()}
    quantities.update({"c": c, "grid_count": float(grid_count), "max_seam_gap": seam_gap, "min_combination": float(combo.min())})
    passed = sum(violations.values()) == 0 and seam_gap <= SEAM_TOLERANCE
    logger.info("d-profile c=%g: %s", c, "pass" if passed else "fail")
    return VerificationReport(
        check_id=f"auxfn-d-profile/c={c:g}",
        anchor="d(t) + t d'(t) >= 0",
        hypothesis_met=True,
        passed=passed,
        quantities=quantities,
        flags=["branch-boundary-mismatch"],
    )


def check_pi_profile(
    lambdas: tuple[float, ...] = (0.1, 1.0, 10.0), n: int = 2, grid_count: int = 10_000
) -> VerificationReport:
    counts = {"positivity": 0, "upper_bound": 0, "strict_tail": 0, "unit_head": 0}
    sups = []
    worst = -np.inf
    for lam in lambdas:
        t = np.linspace(0, 10 * lam, grid_count)
        value, slope = pi_profile(lam, n, t)
        combo = value ** (n - 1) * (value + t * slope)
        counts["positivity"] += int(np.count_nonzero(value <= 0))
        counts["upper_bound"] += int(np.count_nonzero(combo > 1 + SEAM_TOLERANCE))
        counts["strict_tail"] += int(np.count_nonzero(combo[t >= 2 * lam] >= 1 - 1e-9))
        counts["unit_head"] += int(np.count_nonzero(value[t <= lam] != 1))
        sups.append(float(value.max()))
        worst = max(worst, float(combo.max()))
    gaps = seam_report("pi-profile", n)
    seam_gap = max(max(g.value_gap, g.derivative_gap) for g in gaps)
    sup_spread = max(sups) - min(sups)
    quantities = {f"violations_{name}": float(count) for name, count in counts.items()}
    quantities.update({
        "n": float(n),
        "max_combination": worst,
        "sup_pi": max(sups),
        "sup_spread": sup_spread,
        "max_seam_gap": seam_gap,
    })
    passed = sum(counts.values()) == 0 and seam_gap <= SEAM_TOLERANCE and sup_spread <= SEAM_TOLERANCE
    logger.info("pi-profile n=%d: %s", n, "pass" if passed else "fail")
    return VerificationReport(
        check_id=f"auxfn-pi-profile/n={n}",
        anchor="pi(t)^(n-1) (pi(t) + t pi'(t)) <= 1",
        hypothesis_met=True,
        passed=passed,
        quantities=quantities,
    )
