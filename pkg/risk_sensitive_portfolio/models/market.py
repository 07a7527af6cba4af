from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class MarketParams(BaseModel):
    """Constants of the bond/stock market, the investor and the horizon.

    Defaults are the reference market (T=1, c=1, m=0.55, r=0.05, σ=0.5, σ̄=0.3).
    Construction only checks types; `model.validate` enforces the domain invariants.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    r: float = Field(default=0.05, description="Constant interest rate (1/year)")
    c: float = Field(
        default=1.0, description="Mean-reversion speed of the log-price (1/year)"
    )
    m: float = Field(default=0.55, description="Slope of the log-price trend (1/year)")
    lbar0: float = Field(
        default=0.0, description="Intercept of the log-price trend (log-price units)"
    )
    sigma: float = Field(default=0.5, description="Volatility σ of the first noise")
    sigma_bar: float = Field(
        default=0.3, description="Volatility σ̄ of the second noise"
    )
    rho: float = Field(default=0.2, description="Correlation between the two noises")
    gamma: float = Field(default=0.5, description="Risk-sensitive HARA exponent γ")
    horizon: float = Field(default=1.0, description="Investment horizon T (years)")
    x0: float = Field(default=1.0, description="Initial wealth")

    @property
    def vol_sq_sum(self) -> float:
        """σ² + σ̄²"""
        return self.sigma**2 + self.sigma_bar**2

    @property
    def cross(self) -> float:
        """ρσσ̄"""
        return self.rho * self.sigma * self.sigma_bar

    @property
    def total_var(self) -> float:
        """σ² + σ̄² + 2ρσσ̄, the instantaneous variance of the log-price"""
        return self.vol_sq_sum + 2.0 * self.cross

    @property
    def denominator(self) -> float:
        """D = (γ-1)(σ²+σ̄²) - 2ρσσ̄, shared by every closed-form coefficient"""
        return (self.gamma - 1.0) * self.vol_sq_sum - 2.0 * self.cross

    @property
    def excess_drift(self) -> float:
        """½(σ²+σ̄²+2ρσσ̄) + m - r"""
        return 0.5 * self.total_var + self.m - self.r

    def trend(self, t):
        """Deterministic log-price trend L̄(t) = m·t + L̄₀."""
        return self.m * t + self.lbar0


class StatePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float = Field(description="Time (years)")
    x: float = Field(description="Reduced state x(t) (log-price units)")
    l: Optional[float] = Field(
        default=None, description="Raw log-price L(t), when known"
    )
