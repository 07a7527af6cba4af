"""Market model: parameter validation, the log-price/state transform, the running cost h
and the solvability predicates of the Riccati equation."""

from typing import Optional, Tuple

from .errors import (
    DegenerateDenominator,
    GammaZero,
    NonpositiveHorizon,
    NonpositiveMeanReversion,
    NonpositiveWealth,
    RhoOutOfRange,
    ZeroVolatility,
)
from .models import MarketParams, StatePoint


def validate(params: MarketParams) -> MarketParams:
    """Return `params` unchanged if every model invariant holds.

    Raises the error class of the first violated invariant.
    """
    if params.sigma == 0.0 or params.sigma_bar == 0.0:
        raise ZeroVolatility(
            f"volatilities must be nonzero, got sigma={params.sigma}, "
            f"sigma_bar={params.sigma_bar}"
        )
    if not -1.0 <= params.rho <= 1.0:
        raise RhoOutOfRange(f"rho must lie in [-1, 1], got {params.rho}")
    if params.gamma == 0.0:
        raise GammaZero("the HARA exponent gamma must be nonzero")
    if params.c <= 0.0:
        raise NonpositiveMeanReversion(f"c must be positive, got {params.c}")
    if params.horizon <= 0.0:
        raise NonpositiveHorizon(f"horizon must be positive, got {params.horizon}")
    if params.x0 <= 0.0:
        raise NonpositiveWealth(f"x0 must be positive, got {params.x0}")
    if params.denominator == 0.0:
        raise DegenerateDenominator(
            f"(gamma-1)(sigma^2+sigma_bar^2) - 2 rho sigma sigma_bar vanishes "
            f"at gamma={params.gamma}, rho={params.rho}"
        )
    return params


def state_from_logprice(params: MarketParams, t, l):
    """x = L - (m·t + L̄₀) + m/c"""
    return l - params.trend(t) + params.m / params.c


def logprice_from_state(params: MarketParams, t, x):
    """Inverse of `state_from_logprice`."""
    return x + params.trend(t) - params.m / params.c


def state_point(params: MarketParams, t: float, l: float) -> StatePoint:
    return StatePoint(t=t, x=state_from_logprice(params, t, l), l=l)


def running_cost(params: MarketParams, x, u):
    """h(x, u) in reduced coordinates, using c(L̄ - L) = m - c·x.

    Works elementwise on numpy arrays.
    """
    drift_gap = params.m - params.c * x
    return (
        0.5 * u * u * params.denominator
        + params.r * (1.0 - u)
        + u * (drift_gap + 0.5 * params.total_var)
    )


def solvability_bound(params: MarketParams) -> Tuple[bool, Optional[float]]:
    """Check the Δ > 0 condition in its γ form and, for ρ in (-1, 1) without 0,
    the resulting upper bound γ < 2ρσσ̄/(σ²+σ̄²) + 1.
    """
    s = params.vol_sq_sum
    cross = params.cross
    gamma = params.gamma
    v_sq = s * s + 4.0 * cross * (s + cross)
    if v_sq > 0.0:
        delta_positive = (gamma - 1.0) / gamma**2 < 2.0 * cross * s / v_sq
    else:
        # σ = σ̄ with ρ = -1: the fraction is 0/0, use the multiplied-out form
        delta_positive = 2.0 * gamma**2 * cross * s > 0.0

    gamma_upper = None
    if -1.0 < params.rho < 1.0 and params.rho != 0.0:
        gamma_upper = 2.0 * cross / s + 1.0
    return bool(delta_positive), gamma_upper
