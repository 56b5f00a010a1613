import math
from enum import Enum
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class DomainKind(str, Enum):
    BALL = "ball"
    ANNULUS = "annulus"
    RECTANGLE = "rectangle"


class Domain(BaseModel):
    """A ball, annulus or axis-aligned rectangle in R^n.

    Attributes:
        kind: shape of the domain.
        center: center of the ball/annulus, or of the rectangle.
        r_inner: inner radius (0 for a ball).
        r_outer: outer radius of a ball/annulus.
        extents: full side lengths of a rectangle.
    """

    model_config = ConfigDict(frozen=True)

    kind: DomainKind
    center: tuple[float, ...]
    r_inner: float = Field(0.0, ge=0)
    r_outer: Optional[float] = Field(None, gt=0)
    extents: Optional[tuple[float, ...]] = None

    @model_validator(mode="after")
    def check_shape(self) -> "Domain":
        if len(self.center) < 2:
            raise ValueError("domains live in R^n with n >= 2")
        if self.kind == DomainKind.RECTANGLE:
            if self.extents is None or len(self.extents) != len(self.center):
                raise ValueError("a rectangle needs one extent per axis")
            if min(self.extents) <= 0:
                raise ValueError("rectangle extents must be strictly positive")
            return self
        if self.r_outer is None:
            raise ValueError(f"{self.kind.value} needs an outer radius")
        if self.r_inner >= self.r_outer:
            raise ValueError("r_inner must be smaller than r_outer")
        if self.kind == DomainKind.BALL and self.r_inner != 0:
            raise ValueError("a ball has r_inner = 0")
        if self.kind == DomainKind.ANNULUS and self.r_inner <= 0:
            raise ValueError("an annulus has r_inner > 0")
        return self

    @classmethod
    def ball(cls, center, radius: float) -> "Domain":
        return cls(kind=DomainKind.BALL, center=tuple(center), r_outer=radius)

    @classmethod
    def annulus(cls, center, r_inner: float, r_outer: float) -> "Domain":
        return cls(kind=DomainKind.ANNULUS, center=tuple(center), r_inner=r_inner, r_outer=r_outer)

    @classmethod
    def rectangle(cls, lower, upper) -> "Domain":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        return cls(
            kind=DomainKind.RECTANGLE,
            center=tuple((lower + upper) / 2),
            extents=tuple(upper - lower),
        )

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def radius(self) -> float:
        """Outer radius, or half the shortest side of a rectangle."""
        if self.kind == DomainKind.RECTANGLE:
            return min(self.extents) / 2
        return self.r_outer

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center, dtype=float)
        if self.kind == DomainKind.RECTANGLE:
            half = np.asarray(self.extents) / 2
        else:
            half = np.full(self.dim, self.r_outer)
        return c - half, c + half

    def measure(self) -> float:
        if self.kind == DomainKind.RECTANGLE:
            return float(np.prod(self.extents))
        n = self.dim
        unit = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        return unit * (self.r_outer ** n - self.r_inner ** n)

    def diameter(self) -> float:
        if self.kind == DomainKind.RECTANGLE:
            return float(np.linalg.norm(self.extents))
        return 2 * self.r_outer

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Strict interior membership; boundary points are outside."""
        points = np.atleast_2d(points)
        offset = points - np.asarray(self.center)
        if self.kind == DomainKind.RECTANGLE:
            half = np.asarray(self.extents) / 2
            return np.all(np.abs(offset) < half, axis=1)
        rho = np.linalg.norm(offset, axis=1)
        return (rho < self.r_outer) & (rho > self.r_inner if self.r_inner > 0 else True)

    def margin(self, center, radius: float) -> float:
        """Distance from the closed ball B(center, radius) to the boundary; <= 0 if it is not interior."""
        c = np.asarray(center, dtype=float)
        offset = c - np.asarray(self.center)
        if self.kind == DomainKind.RECTANGLE:
            half = np.asarray(self.extents) / 2
            return float(np.min(half - np.abs(offset)) - radius)
        d = float(np.linalg.norm(offset))
        gap = self.r_outer - d - radius
        if self.kind == DomainKind.ANNULUS:
            gap = min(gap, d - radius - self.r_inner)
        return gap


class GridSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    points_per_axis: int = Field(128, ge=4)
    jitter_seed: Optional[int] = None


class QuadratureSpec(BaseModel):
    """Quadrature for singular double integrals and interior pairings.

    For ``tensor-midpoint`` the sample count is the number of nodes per axis;
    for ``monte-carlo`` it is the number of sampled pairs.
    """

    model_config = ConfigDict(frozen=True)

    scheme: Literal["tensor-midpoint", "monte-carlo"] = "tensor-midpoint"
    sample_count: int = Field(32, ge=16)
    # None means twice the grid spacing of the finest level
    diagonal_exclusion_radius: Optional[float] = Field(None, gt=0)
    seed: int = 0
