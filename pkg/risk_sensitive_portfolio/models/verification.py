from pydantic import BaseModel, Field, model_validator


class VerificationReport(BaseModel):
    name: str = Field(description="Check label")
    passed: bool = Field(description="metric <= tolerance")
    metric: float = Field(description="Worst-case value of the check statistic")
    tolerance: float
    details: str = Field(default="", description="Free-text diagnostics")
    gated: bool = Field(
        default=True, description="Whether a failure fails the suite (else adjudication)"
    )

    @model_validator(mode="after")
    def _consistent(self):
        if self.passed != (self.metric <= self.tolerance):
            raise ValueError(
                f"{self.name}: passed={self.passed} contradicts metric={self.metric} "
                f"tolerance={self.tolerance}"
            )
        return self

    @classmethod
    def judge(cls, name: str, metric: float, tolerance: float, **kwargs):
        return cls(
            name=name,
            passed=bool(metric <= tolerance),
            metric=float(metric),
            tolerance=float(tolerance),
            **kwargs,
        )
