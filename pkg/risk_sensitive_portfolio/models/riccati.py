from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .market import MarketParams


class RiccatiCoeffs(BaseModel):
    model_config = ConfigDict(frozen=True)

    k0: float = Field(description="Quadratic coefficient K₀ of the rewritten Riccati equation")
    k1: float = Field(description="Linear coefficient K₁ (1/year)")
    h_coef: float = Field(description="Constant term H (1/year)")
    delta: float = Field(description="Discriminant Δ = 4(K₁² + H·K₀)")
    ell: Optional[float] = Field(
        default=None, description="ℓ = (K₁+√Δ/2)/(K₁-√Δ/2), when Δ>0 and K₁≠√Δ/2"
    )
    alpha1: Optional[float] = Field(
        default=None, description="α₁ = (K₁+√Δ/2)/K₀, when Δ>0 and K₀≠0"
    )
    alpha2: Optional[float] = Field(
        default=None, description="α₂ = (K₁-√Δ/2)/K₀, when Δ>0 and K₀≠0"
    )

    @property
    def sqrt_delta(self) -> float:
        return float(np.sqrt(self.delta)) if self.delta > 0 else 0.0


class ValueFunctions(BaseModel):
    """Q(·) and φ(·) on [0, T]: tabulated on a uniform grid, evaluable anywhere.

    Q is evaluated by `q_exact` when the solver attached a closed-form evaluator
    (`q_source` is "closed_form" or "linear"), otherwise by linear interpolation of
    the table.
    φ is always interpolated, so both evaluators reproduce the tables at the nodes.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: MarketParams
    grid: np.ndarray = Field(description="Uniform time grid 0 = t₀ < … < t_N = T")
    q_tab: np.ndarray = Field(description="Q on the grid")
    phi_tab: np.ndarray = Field(description="φ on the grid")
    coeffs: RiccatiCoeffs
    q_source: Literal["closed_form", "linear", "numeric"] = Field(
        description="How Q was obtained"
    )
    q_exact: Optional[Callable[[np.ndarray], np.ndarray]] = Field(
        default=None, exclude=True, description="Closed-form evaluator of Q, if any"
    )

    def q(self, t):
        t_arr = np.asarray(t, dtype=float)
        if self.q_exact is not None:
            out = np.asarray(self.q_exact(t_arr), dtype=float)
        else:
            out = np.interp(t_arr, self.grid, self.q_tab)
        return out if np.ndim(t) else float(out)

    def phi(self, t):
        out = np.interp(np.asarray(t, dtype=float), self.grid, self.phi_tab)
        return out if np.ndim(t) else float(out)
