from typing import Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.maps import TestFunction
from app.schemas.domain_payload import QuadratureSpec


class FractionalParams(BaseModel):
    """Smoothness s, integrability p and dimension n of W^{s,p}(R^n)."""

    model_config = ConfigDict(frozen=True)

    s: float = Field(..., gt=0, lt=1)
    p: float = Field(..., gt=1)
    n: int = Field(2, ge=2)

    @classmethod
    def critical(cls, s: float, n: int = 2) -> "FractionalParams":
        """The Jacobian exponent p = n/s."""
        return cls(s=s, p=n / s, n=n)

    @property
    def jacobian_threshold(self) -> float:
        return self.n / (self.n + 1)

    @property
    def trace_order(self) -> float:
        return self.s - 1 / self.p


class SeminormEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str = "map"
    s: float
    p: float
    value: float = Field(..., ge=0)
    refinement_trend: list[float]
    scheme: QuadratureSpec

    @model_validator(mode="after")
    def check_trend(self) -> "SeminormEstimate":
        if not self.refinement_trend or min(self.refinement_trend) < 0:
            raise ValueError("refinement trend entries must be nonnegative")
        if self.value != self.refinement_trend[-1]:
            raise ValueError("value must be the last refinement entry")
        return self

    def to_record(self) -> dict:
        return {
            "label": self.label,
            "s": self.s,
            "p": self.p,
            "value": self.value,
            "trend": list(self.refinement_trend),
            "scheme": self.scheme.model_dump(),
        }


class PairingResult(BaseModel):
    """Jac(f)[phi] along a decreasing mollification sequence."""

    model_config = ConfigDict(frozen=True)

    value: float
    epsilon_trend: list[tuple[float, float]]
    converged: bool
    tolerance: float
    # integral of det(Df) * phi with the exact differential, smooth maps only
    exact_value: Optional[float] = None
    # eps^2 Richardson value from the last two entries
    extrapolated: Optional[float] = None

    @model_validator(mode="after")
    def check_trend(self) -> "PairingResult":
        if len(self.epsilon_trend) < 3:
            raise ValueError("a pairing trend needs at least 3 entries")
        if self.value != self.epsilon_trend[-1][1]:
            raise ValueError("value must be the last trend entry")
        return self


Verdict = Literal["nonnegative-evidence", "positive-evidence", "sign-changing", "null"]


class SignClassification(BaseModel):
    model_config = ConfigDict(frozen=True)

    verdict: Verdict
    min_pairing: float
    witness: TestFunction
    pairings: list[float]
    tolerance: float

    @property
    def is_nonnegative(self) -> bool:
        return self.verdict in ("nonnegative-evidence", "positive-evidence")

    @property
    def is_positive(self) -> bool:
        return self.verdict == "positive-evidence"


class DegreeResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    degree: int
    min_distance: float = Field(..., gt=0)
    angle_residual: float = Field(..., ge=0)
    max_increment: float = Field(..., ge=0)
    trusted: bool
