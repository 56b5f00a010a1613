"""The map gallery, test bumps, mollification and differentials."""
import math
import re
import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate

from app.errors import DomainError, SingularPointError, UnknownMapError
from app.schemas.domain_payload import Domain

logger = logging.getLogger(__name__)

SmoothnessHint = Literal["smooth", "singular-at-points", "discontinuous"]

# below this radius the log-log map is frozen at its value on the sphere |x| = LOGLOG_CLAMP
LOGLOG_CLAMP = 1e-8

# rows of evaluation points handled per mollifier pass
MOLLIFY_CHUNK = 2048

ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class MapField:
    """An evaluatable map f: Omega -> R^k with an optional exact differential.

    ``evaluate`` takes an (m, n) array of points and returns (m, k) values;
    ``differential`` returns the (m, k, n) stack of Df.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    differential: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "map"
    smoothness_hint: SmoothnessHint = "smooth"
    singular_points: tuple[tuple[float, ...], ...] = ()
    singular_radius: float = LOGLOG_CLAMP

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(np.atleast_2d(np.asarray(points, dtype=float)))

    def value_at(self, point: Sequence[float]) -> np.ndarray:
        return self(np.asarray(point, dtype=float)[None, :])[0]

    def is_singular(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        mask = np.zeros(len(points), dtype=bool)
        for sing in self.singular_points:
            mask |= np.linalg.norm(points - np.asarray(sing), axis=1) < self.singular_radius
        return mask

    def jacobian_matrices(self, points: np.ndarray, h: float = 1e-5) -> np.ndarray:
        """Exact Df when available, else central differences with step h."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.differential is not None:
            return self.differential(points)
        return finite_difference_matrices(self, points, h)


def finite_difference_matrices(f: MapField, points: np.ndarray, h: float) -> np.ndarray:
    columns = []
    for axis in range(points.shape[1]):
        step = np.zeros(points.shape[1])
        step[axis] = h
        forward = f.evaluate(points + step).reshape(len(points), -1)
        backward = f.evaluate(points - step).reshape(len(points), -1)
        columns.append((forward - backward) / (2 * h))
    return np.stack(columns, axis=-1)


# ---------------------------------------------------------------------------
# Gallery
# ---------------------------------------------------------------------------

def _as_complex(points: np.ndarray) -> np.ndarray:
    return points[:, 0] + 1j * points[:, 1]


def _holomorphic_block(derivative: np.ndarray, conjugate: bool) -> np.ndarray:
    a, b = derivative.real, derivative.imag
    if conjugate:
        rows = [[a, -b], [-b, -a]]
    else:
        rows = [[a, -b], [b, a]]
    return np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)


def _identity() -> MapField:
    return MapField(
        evaluate=lambda x: np.array(x, dtype=float),
        differential=lambda x: np.broadcast_to(np.eye(x.shape[1]), (len(x), x.shape[1], x.shape[1])).copy(),
        label="identity",
    )


def _power(k: int) -> MapField:
    if k == 0:
        raise UnknownMapError("power maps need k != 0")
    m = abs(k)
    conjugate = k < 0

    def evaluate(x: np.ndarray) -> np.ndarray:
        w = _as_complex(x) ** m
        return np.column_stack([w.real, -w.imag if conjugate else w.imag])

    def differential(x: np.ndarray) -> np.ndarray:
        return _holomorphic_block(m * _as_complex(x) ** (m - 1), conjugate)

    return MapField(evaluate=evaluate, differential=differential, label=f"power-{k}")


def _conjugation() -> MapField:
    return replace(_power(-1), label="conjugation")


def _constant(value: Sequence[float]) -> MapField:
    value = np.asarray(value, dtype=float)
    return MapField(
        evaluate=lambda x: np.broadcast_to(value, (len(x), len(value))).copy(),
        differential=lambda x: np.zeros((len(x), len(value), x.shape[1])),
        label="constant",
    )


def _loglog() -> MapField:
    def evaluate(x: np.ndarray) -> np.ndarray:
        rho = np.maximum(np.linalg.norm(x, axis=1), LOGLOG_CLAMP)
        first = np.log(np.log(2.0 / rho))
        return np.column_stack([first, np.zeros_like(first)])

    def differential(x: np.ndarray) -> np.ndarray:
        rho = np.linalg.norm(x, axis=1)
        safe = np.maximum(rho, LOGLOG_CLAMP)
        radial = -1.0 / (safe * np.log(2.0 / safe))
        grad = (radial / safe)[:, None] * x
        grad[rho < LOGLOG_CLAMP] = 0.0
        out = np.zeros((len(x), 2, x.shape[1]))
        out[:, 0, :] = grad
        return out

    return MapField(
        evaluate=evaluate,
        differential=differential,
        label="loglog-counterexample",
        smoothness_hint="singular-at-points",
        singular_points=((0.0, 0.0),),
    )


def _gradient_quartic() -> MapField:
    def differential(x: np.ndarray) -> np.ndarray:
        out = np.zeros((len(x), 2, 2))
        out[:, 0, 0] = 3 * x[:, 0] ** 2
        out[:, 1, 1] = 3 * x[:, 1] ** 2
        return out

    return MapField(evaluate=lambda x: x ** 3, differential=differential, label="gradient-quartic")


def _rotation(delta: float) -> MapField:
    return MapField(
        evaluate=lambda x: delta * (x @ ROTATION.T),
        differential=lambda x: np.broadcast_to(delta * ROTATION, (len(x), 2, 2)).copy(),
        label=f"rotation-{delta:g}",
    )


def rotation_distortion(f: MapField, delta: float) -> MapField:
    """f_delta(x) = f(x) + delta * (-x2, x1)."""
    differential = None
    if f.differential is not None:
        differential = lambda x: f.differential(x) + delta * ROTATION
    return MapField(
        evaluate=lambda x: f.evaluate(x) + delta * (x @ ROTATION.T),
        differential=differential,
        label=f"{f.label}+rotation-{delta:g}",
        smoothness_hint=f.smoothness_hint,
        singular_points=f.singular_points,
    )


GALLERY_NAMES = {
    "identity": "x -> x",
    "power": "z -> z^k for k > 0, z -> conj(z)^|k| for k < 0 (parameter k)",
    "conjugation": "z -> conj(z)",
    "constant": "x -> c (parameter value, default (2, 0))",
    "loglog-counterexample": "x -> (log log(2/|x|), 0), singular at 0",
    "gradient-quartic": "(x, y) -> (x^3, y^3), the gradient of (x^4 + y^4)/4",
    "rotation": "(x, y) -> delta * (-y, x) (parameter delta, default 1)",
    "rotation-distortion": "f + delta * (-y, x) for a base gallery map (parameters base, delta)",
}

ALIASES = {"loglog": "loglog-counterexample", "quartic": "gradient-quartic"}

SMOOTH_GALLERY = ("identity", "power-2", "power-3", "gradient-quartic")

_POWER_LABEL = re.compile(r"^power-(-?\d+)$")
_ROTATION_LABEL = re.compile(r"^rotation-(-?[0-9.]+(?:e-?\d+)?)$")


def gallery(name: str, **params) -> MapField:
    """Build a gallery map by name. ``power-3`` and ``rotation-0.2`` are accepted as shorthands."""
    name = ALIASES.get(name, name)
    power = _POWER_LABEL.match(name)
    if power:
        return _power(int(power.group(1)))
    rotation = _ROTATION_LABEL.match(name)
    if rotation:
        return _rotation(float(rotation.group(1)))
    if name == "identity":
        return _identity()
    if name == "power":
        if "k" not in params:
            raise UnknownMapError("power maps need an integer k")
        return _power(int(params["k"]))
    if name == "conjugation":
        return _conjugation()
    if name == "constant":
        return _constant(params.get("value") or (2.0, 0.0))
    if name == "loglog-counterexample":
        return _loglog()
    if name == "gradient-quartic":
        return _gradient_quartic()
    if name == "rotation":
        return _rotation(float(params.get("delta", 1.0)))
    if name == "rotation-distortion":
        base = params.get("base", "identity")
        if isinstance(base, str):
            base = gallery(base, **{k: v for k, v in params.items() if k not in ("base", "delta")})
        return rotation_distortion(base, float(params.get("delta", 1.0)))
    raise UnknownMapError(f"unknown gallery map {name!r}")


def scale(f: MapField, lam: float) -> MapField:
    """x -> lam * f(x)."""
    differential = None
    if f.differential is not None:
        differential = lambda x: lam * f.differential(x)
    return replace(f, evaluate=lambda x: lam * f.evaluate(x), differential=differential, label=f"{lam:g}*{f.label}")


def dilate(f: MapField, lam: float) -> MapField:
    """x -> f(lam * x)."""
    differential = None
    if f.differential is not None:
        differential = lambda x: lam * f.differential(lam * x)
    singular = tuple(tuple(np.asarray(p) / lam) for p in f.singular_points)
    return replace(
        f,
        evaluate=lambda x: f.evaluate(lam * x),
        differential=differential,
        label=f"{f.label}(x*{lam:g})",
        singular_points=singular,
    )


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def unit_bump_mass(n: int) -> float:
    """Integral over R^n of exp(-1/(1-|u|^2)) on the unit ball (radial quadrature)."""
    sphere = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    radial, _ = integrate.quad(lambda r: math.exp(-1.0 / (1.0 - r * r)) * r ** (n - 1), 0.0, 1.0, limit=200)
    return sphere * radial


def bump_profile(q: np.ndarray) -> np.ndarray:
    """exp(-1/(1-q)) for q = |u|^2 < 1, zero elsewhere."""
    inside = q < 1
    out = np.zeros_like(q, dtype=float)
    out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
    return out


class TestFunction(BaseModel):
    """A smooth nonnegative bump supported in the closed ball B(center, radius)."""

    __test__ = False
    model_config = ConfigDict(frozen=True)

    center: tuple[float, ...]
    radius: float = Field(..., gt=0)
    amplitude: float = Field(1.0, gt=0)

    @property
    def dim(self) -> int:
        return len(self.center)

    def _scaled(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - np.asarray(self.center)) / self.radius

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        u = self._scaled(points)
        return self.amplitude * bump_profile(np.sum(u * u, axis=1))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        u = self._scaled(points)
        q = np.sum(u * u, axis=1)
        value = self.amplitude * bump_profile(q)
        inside = q < 1
        factor = np.zeros_like(q)
        factor[inside] = -2.0 / (1.0 - q[inside]) ** 2
        return (value * factor)[:, None] * u / self.radius

    def integral(self) -> float:
        return self.amplitude * self.radius ** self.dim * unit_bump_mass(self.dim)

    def as_field(self) -> MapField:
        return MapField(
            evaluate=lambda x: self.evaluate(x)[:, None],
            differential=lambda x: self.gradient(x)[:, None, :],
            label=f"bump@{self.center}r{self.radius:g}",
        )


# ---------------------------------------------------------------------------
# Mollification and determinants
# ---------------------------------------------------------------------------

class MollifierSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(..., gt=0)
    kernel_sample_count: int = Field(16, ge=4)


@lru_cache(maxsize=None)
def kernel_nodes(n: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric midpoint nodes of the unit ball and normalized bump weights (mass exactly 1)."""
    axis = -1 + (2 * np.arange(count) + 1) / count
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    q = np.sum(mesh * mesh, axis=1)
    weights = bump_profile(q)
    keep = weights > 0
    weights = weights[keep]
    return mesh[keep], weights / weights.sum()


def mollify(
    f: MapField,
    spec: MollifierSpec,
    region: Optional[tuple[Sequence[float], float]] = None,
    domain: Optional[Domain] = None,
) -> MapField:
    """f * eta_eps with the standard bump mollifier.

    When both the evaluation region (a ball given as (center, radius)) and
    the domain are passed, eps must be smaller than their separation.
    """
    eps = spec.epsilon
    if region is not None and domain is not None:
        margin = domain.margin(region[0], region[1])
        if eps >= margin:
            raise DomainError(f"epsilon {eps:g} is too large: the region is only {margin:g} away from the boundary")

    def nodes_for(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return kernel_nodes(x.shape[1], spec.kernel_sample_count)

    def convolve(source: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
        nodes, weights = nodes_for(x)
        blocks = []
        for start in range(0, len(x), MOLLIFY_CHUNK):
            part = x[start:start + MOLLIFY_CHUNK]
            shifted = (part[:, None, :] - eps * nodes[None, :, :]).reshape(-1, x.shape[1])
            values = source(shifted)
            values = values.reshape(len(part), len(nodes), *values.shape[1:])
            blocks.append(np.tensordot(weights, values, axes=([0], [1])))
        if not blocks:
            return source(x)[:0]
        return np.concatenate(blocks)

    differential = None
    if f.differential is not None:
        differential = lambda x: convolve(f.differential, x)
    return MapField(
        evaluate=lambda x: convolve(f.evaluate, x),
        differential=differential,
        label=f"{f.label}*eta[{eps:g}]",
        smoothness_hint="smooth",
    )


def jacobian_det(f: MapField, x: Sequence[float], h: float = 1e-5) -> float:
    """det Df(x): exact differential when available, else central differences."""
    x = np.asarray(x, dtype=float)[None, :]
    if f.is_singular(x)[0]:
        raise SingularPointError(f"{f.label} is singular at {tuple(x[0])}")
    return float(np.linalg.det(f.jacobian_matrices(x, h)[0]))


def jacobian_dets(f: MapField, points: np.ndarray, h: float = 1e-5) -> np.ndarray:
    return np.linalg.det(f.jacobian_matrices(points, h))


def sup_scale(f: MapField, points: np.ndarray) -> float:
    values = f.evaluate(points)
    return float(np.max(np.linalg.norm(values.reshape(len(points), -1), axis=1), initial=0.0))
