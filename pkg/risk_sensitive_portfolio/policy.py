"""Control laws u(t, x), the adjoint triple and the 𝓗-function.

Every policy is a callable `policy(t, x)` taking a scalar time and a numpy array of
reduced states and returning an array of investment proportions of the same shape.
"""

from typing import Callable, Optional

import numpy as np

from .errors import NonconvexH
from .models import AdjointTriple, MarketParams, MinimizerReport, ValueFunctions
from .utils.logger import get_logger

logger = get_logger(__name__)

MINIMIZER_TOLERANCE = 2e-4
MINIMIZER_U_HALFWIDTH = 10.0
MINIMIZER_U_STEP = 1e-4


def feedback_gain(params: MarketParams, q, gain_sign: float = 1.0):
    return (
        -gain_sign * params.gamma * params.vol_sq_sum * q + params.c
    ) / params.denominator


def feedback_offset(params: MarketParams, phi):
    return (
        -params.gamma * params.vol_sq_sum * phi - params.excess_drift
    ) / params.denominator


class ConstantPolicy:
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, t: float, x) -> np.ndarray:
        return np.full(np.shape(x), self.value)

    def __repr__(self) -> str:
        return f"ConstantPolicy({self.value})"


class ZeroPolicy(ConstantPolicy):
    """Everything in the bond."""

    def __init__(self):
        super().__init__(0.0)

    def __repr__(self) -> str:
        return "ZeroPolicy()"


class FeedbackPolicy:
    """The optimal affine law u(t, x) = a(t)·x + b(t) built from Q and φ.

    a(t) = [-γ(σ²+σ̄²)Q(t) + c]/D
    b(t) = -γ(σ²+σ̄²)φ(t)/D - [½(σ²+σ̄²+2ρσσ̄) + m - r]/D

    `gain_sign=-1` flips the sign of the Q term in a(t); that law is not optimal and
    serves as a negative control.
    """

    def __init__(self, params: MarketParams, vf: ValueFunctions, gain_sign: float = 1.0):
        self.params = params
        self.vf = vf
        self.gain_sign = gain_sign

    def a(self, t):
        return feedback_gain(self.params, self.vf.q(t), self.gain_sign)

    def b(self, t):
        return feedback_offset(self.params, self.vf.phi(t))

    def __call__(self, t: float, x) -> np.ndarray:
        return self.a(t) * np.asarray(x, dtype=float) + self.b(t)

    def flipped_gain(self) -> "FeedbackPolicy":
        return FeedbackPolicy(self.params, self.vf, gain_sign=-self.gain_sign)

    def __repr__(self) -> str:
        flipped = ", flipped gain" if self.gain_sign < 0 else ""
        return f"FeedbackPolicy(q_source={self.vf.q_source}{flipped})"


class PerturbedPolicy:
    """`base` plus an additive shift δ(t, x)."""

    def __init__(self, base: Callable, shift: Callable, label: str = "shift"):
        self.base = base
        self.shift = shift
        self.label = label

    def __call__(self, t: float, x) -> np.ndarray:
        return self.base(t, x) + self.shift(t, np.asarray(x, dtype=float))

    def __repr__(self) -> str:
        return f"PerturbedPolicy({self.base!r} + {self.label})"


def feedback(params: MarketParams, vf: ValueFunctions, t: float, x):
    out = FeedbackPolicy(params, vf)(t, x)
    return out if np.ndim(x) else float(out)


def adjoints(params: MarketParams, vf: ValueFunctions, t: float, x: float) -> AdjointTriple:
    """(p̄, q̄₁, q̄₂) = (-Q(t)x - φ(t), -σQ(t), -σ̄Q(t))"""
    q = vf.q(t)
    return AdjointTriple(
        p=-q * x - vf.phi(t),
        q1=-params.sigma * q,
        q2=-params.sigma_bar * q,
    )


def h_function(
    params: MarketParams,
    vf: Optional[ValueFunctions],
    t: float,
    x: float,
    u,
    p: float,
    q1: float,
    q2: float,
):
    """𝓗(t, x, u, p, q₁, q₂); quadratic in u with coefficient -D/2. Vectorised over u."""
    s = params.vol_sq_sum
    gamma = params.gamma
    u = np.asarray(u, dtype=float)
    return (
        (-params.c * x + gamma * s * u) * p
        - 0.5 * s * gamma * p * p
        - 0.5 * u * u * params.denominator
        - (params.excess_drift - params.c * x) * u
        + params.sigma * q1
        + params.sigma_bar * q2
        - params.r
    )


def stationary_control(params: MarketParams, x, p):
    """Root of ∂𝓗/∂u: u = [γ(σ²+σ̄²)p + c·x - (½(σ²+σ̄²+2ρσσ̄) + m - r)]/D."""
    return (
        params.gamma * params.vol_sq_sum * p + params.c * x - params.excess_drift
    ) / params.denominator


def grid_argmin(
    params: MarketParams,
    vf: ValueFunctions,
    t: float,
    x: float,
    halfwidth: float = MINIMIZER_U_HALFWIDTH,
    u_step: float = MINIMIZER_U_STEP,
) -> float:
    """Minimizer of 𝓗 over a uniform u grid, with the adjoints of the feedback law.

    The grid spans `halfwidth` either side of the stationary point of 𝓗.
    """
    triple = adjoints(params, vf, t, x)
    center = float(stationary_control(params, x, triple.p))
    n = 2 * int(round(halfwidth / u_step)) + 1
    u_grid = np.linspace(center - halfwidth, center + halfwidth, n)
    values = h_function(params, vf, t, x, u_grid, triple.p, triple.q1, triple.q2)
    return float(u_grid[np.argmin(values)])


def minimizer_check(
    params: MarketParams,
    vf: ValueFunctions,
    samples: int = 100,
    seed: int = 0,
    tolerance: float = MINIMIZER_TOLERANCE,
    x_halfwidth: float = 2.0,
) -> MinimizerReport:
    """Compare the grid minimizer of 𝓗 with the feedback law at random (t, x).

    Raises:
        NonconvexH: D >= 0, so 𝓗 has no minimum in u
    """
    if params.denominator >= 0.0:
        raise NonconvexH(
            f"D = {params.denominator:.6g} >= 0 at gamma={params.gamma}, rho={params.rho}"
        )
    rng = np.random.default_rng(seed)
    center = params.m / params.c
    times = rng.uniform(0.0, params.horizon, samples)
    states = rng.uniform(center - x_halfwidth, center + x_halfwidth, samples)

    worst = 0.0
    for t, x in zip(times, states):
        deviation = abs(grid_argmin(params, vf, t, x) - feedback(params, vf, t, x))
        worst = max(worst, deviation)

    report = MinimizerReport(
        samples=samples,
        max_deviation=worst,
        tolerance=tolerance,
        passed=worst < tolerance,
    )
    logger.debug(f"minimizer check: max deviation {worst:.3g} over {samples} points")
    return report
