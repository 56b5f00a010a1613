from typing import Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.maps import MapField, gallery

TOLERANCE_KEYS = {"distortion", "nullity", "fd"}

CHECK_FAMILIES = (
    "apriori",
    "auxfn-d-profile",
    "auxfn-pi-profile",
    "continuity-certificate",
    "counterexample-nullity",
    "curl-free-pathway",
    "degree-monotonicity",
    "degree-nonnegativity",
    "degree-oracle",
    "distortion-identity",
    "essential-diameter",
    "extension",
    "hygiene",
    "modulus",
    "restriction",
    "sense-preserving",
)


class MapSelector(BaseModel):
    """A gallery name plus the parameters that entry takes."""

    model_config = ConfigDict(frozen=True)

    name: str
    k: Optional[int] = None
    delta: Optional[float] = None
    value: Optional[tuple[float, float]] = None
    base: Optional[str] = None

    def build(self) -> MapField:
        params = {key: val for key, val in self.model_dump(exclude={"name"}).items() if val is not None}
        return gallery(self.name, **params)


def _decreasing(values: list[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


class SuiteConfig(BaseModel):
    """Everything a suite run depends on. Two runs with equal configs produce identical reports."""

    model_config = ConfigDict(frozen=True)

    s_values: list[float] = Field(default_factory=lambda: [0.75], min_length=1)
    n: int = Field(2, ge=2, le=2)
    # seminorm quadrature sizes; regressions use the finest
    resolutions: list[int] = Field(default_factory=lambda: [32, 48], min_length=1)
    eps_sequences: list[list[float]] = Field(default_factory=lambda: [[0.08, 0.04, 0.02]], min_length=1)
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    tolerance_overrides: dict[str, float] = Field(default_factory=dict)
    gallery: Optional[list[str]] = None
    checks: Optional[list[str]] = None
    trace_samples: int = Field(512, ge=32)
    record_timing: bool = False
    constants_path: Optional[str] = None

    @field_validator("resolutions")
    @classmethod
    def ascending_resolutions(cls, value: list[int]) -> list[int]:
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("resolutions must be strictly ascending")
        if min(value) < 16:
            raise ValueError("resolutions must be at least 16")
        return value

    @field_validator("eps_sequences")
    @classmethod
    def decreasing_epsilons(cls, value: list[list[float]]) -> list[list[float]]:
        for seq in value:
            if len(seq) < 3 or not _decreasing(seq) or min(seq) <= 0:
                raise ValueError("each epsilon sequence needs at least 3 strictly decreasing positive entries")
        return value

    @field_validator("tolerance_overrides")
    @classmethod
    def known_tolerances(cls, value: dict[str, float]) -> dict[str, float]:
        unknown = set(value) - TOLERANCE_KEYS
        if unknown:
            raise ValueError(f"unknown tolerance overrides: {sorted(unknown)}")
        return value

    @field_validator("checks")
    @classmethod
    def known_checks(cls, value: Optional[list[str]]) -> Optional[list[str]]:
        if value is None:
            return value
        for name in value:
            if not any(family == name or family.startswith(name + "-") for family in CHECK_FAMILIES):
                raise ValueError(f"unknown check {name!r}")
        return value

    @model_validator(mode="after")
    def jacobian_threshold(self) -> "SuiteConfig":
        threshold = self.n / (self.n + 1)
        for s in self.s_values:
            if not threshold - 1e-12 <= s < 1:
                raise ValueError(f"s = {s:g} is outside [{threshold:.4g}, 1) required for Jacobian checks")
        return self

    @property
    def s(self) -> float:
        return self.s_values[0]

    @property
    def seed(self) -> int:
        return self.seeds[0]

    @property
    def eps_seq(self) -> list[float]:
        return self.eps_sequences[0]

    @property
    def resolution(self) -> int:
        return self.resolutions[-1]

    def tolerance(self, key: str, default: float) -> float:
        return self.tolerance_overrides.get(key, default)

    def selects(self, family: str) -> bool:
        if self.checks is None:
            return True
        return any(family == name or family.startswith(name + "-") for name in self.checks)

    def includes_map(self, name: str) -> bool:
        return self.gallery is None or name in self.gallery


class CliInvocation(BaseModel):
    """Parsed command-line flags, validated before any computation starts."""

    model_config = ConfigDict(frozen=True)

    subcommand: Literal[
        "seminorm", "trace", "degree", "jacobian", "curl", "classify", "check", "suite", "calibrate", "gallery"
    ]
    map: Optional[MapSelector] = None
    center: tuple[float, ...] = (0.0, 0.0)
    radius: float = Field(1.0, gt=0)
    s: float = Field(0.75, gt=0, lt=1)
    p: Optional[float] = Field(None, gt=1)
    n: int = Field(2, ge=2)
    samples: int = Field(512, ge=8)
    resolution: int = Field(128, ge=4)
    output: Optional[str] = None
    format: Literal["json", "csv"] = "json"

    @property
    def exponent(self) -> float:
        return self.p if self.p is not None else self.n / self.s


class DegreeRequest(BaseModel):
    map: MapSelector
    center: tuple[float, float] = (0.0, 0.0)
    r: float = Field(1.0, gt=0)
    p: tuple[float, float] = (0.0, 0.0)
    samples: int = Field(512, ge=32)


class PairingRequest(BaseModel):
    map: MapSelector
    phi_center: tuple[float, float] = (0.0, 0.0)
    phi_radius: float = Field(0.5, gt=0)
    domain_radius: float = Field(1.0, gt=0)
    eps: list[float] = Field(default_factory=lambda: [0.08, 0.04, 0.02], min_length=3)
    sample_count: int = Field(32, ge=16)


class ClassifyRequest(BaseModel):
    map: MapSelector
    domain_radius: float = Field(1.0, gt=0)
    eps: list[float] = Field(default_factory=lambda: [0.08, 0.04, 0.02], min_length=3)
    sample_count: int = Field(24, ge=16)


class SeminormRequest(BaseModel):
    map: MapSelector
    domain_radius: float = Field(1.0, gt=0)
    s: float = Field(..., gt=0, lt=1)
    p: float = Field(..., gt=1)
    scheme: Literal["tensor-midpoint", "monte-carlo"] = "tensor-midpoint"
    sample_count: int = Field(32, ge=16)
    seed: int = 0
