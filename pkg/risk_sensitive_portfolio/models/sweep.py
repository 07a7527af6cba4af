from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .market import MarketParams


class SweepAxis(str, Enum):
    GAMMA = "GAMMA"
    RHO = "RHO"


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    axis: SweepAxis
    values: List[float] = Field(description="Axis values, strictly increasing")
    fixed: MarketParams = Field(
        default_factory=MarketParams, description="Template for the non-swept constants"
    )
    eval_time: float = Field(default=0.0, ge=0.0, description="Time t at which u is read")
    k_offset: float = Field(
        default=0.0, description="Log-return L(t) - L(0) of the state at eval_time > 0"
    )

    @field_validator("values")
    @classmethod
    def _increasing(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        return values


class SweepRow(BaseModel):
    axis: SweepAxis
    value: float
    gamma: float
    rho: float
    t: float
    x: float
    u: float
    Q_t: float
    phi_t: float


class SweepResult(BaseModel):
    """Rows of one or more sweep series, in series order."""

    name: str
    specs: List[SweepSpec]
    rows: List[SweepRow]
    skipped: List[str] = Field(default_factory=list)
