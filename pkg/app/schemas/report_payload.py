import math
from typing import Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator

REPORT_FIELDS = ["check_id", "paper_anchor", "hypothesis_met", "pass", "skipped_probes", "runtime_ms"]


class VerificationReport(BaseModel):
    """Outcome of one check with every quantity its verdict used.

    ``passed`` is serialized as ``pass`` and ``anchor`` as ``paper_anchor``.
    ``passed`` is only meaningful when ``hypothesis_met`` is true; gated runs carry the flag ``hypothesis-not-met``.
    """

    model_config = ConfigDict(populate_by_name=True)

    check_id: str
    anchor: str = Field(..., alias="paper_anchor")
    hypothesis_met: bool
    passed: bool = Field(..., alias="pass")
    quantities: dict[str, Optional[float]] = Field(default_factory=dict)
    skipped_probes: int = Field(0, ge=0)
    runtime_ms: float = Field(0.0, ge=0)
    flags: list[str] = Field(default_factory=list)

    @field_validator("quantities")
    @classmethod
    def finite_quantities(cls, value: dict[str, Optional[float]]) -> dict[str, Optional[float]]:
        # JSON has no infinities; non-finite numbers are stored as null
        return {
            key: (float(v) if v is not None and math.isfinite(v) else None)
            for key, v in value.items()
        }

    @property
    def failed(self) -> bool:
        return self.hypothesis_met and not self.passed

    def to_record(self) -> dict:
        return self.model_dump(by_alias=True)

    def to_row(self) -> list:
        record = self.to_record()
        return [record[name] for name in REPORT_FIELDS]
