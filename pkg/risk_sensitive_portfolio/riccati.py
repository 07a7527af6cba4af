"""The Riccati function Q(·), the auxiliary function φ(·) and the optimal value.

Q solves  Q' - K₀Q² + 2K₁Q + H = 0,  Q(T) = 0
φ solves  φ' + f₁φ + f₂ = 0,          φ(T) = 0,  f₁ = -K₀Q + K₁,  f₂ = M(c - γSQ)/D

with S = σ²+σ̄², V = S + 2ρσσ̄, M = ½V + m - r and D = (γ-1)S - 2ρσσ̄.
Closed forms are used where they exist; fixed-step RK4 is both the fallback and the oracle.
"""

import functools
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .errors import BlowupDetected, DegenerateEll, DeltaNonpositive, PoleOnInterval
from .model import validate
from .models import MarketParams, RiccatiCoeffs, ValueFunctions
from .utils.logger import get_logger, log_execution

logger = get_logger(__name__)

DEFAULT_GRID = 1000
DEFAULT_QUAD_NODES = 2001
DEFAULT_Q_BOUND = 1e8
# relative size below which K₀ is treated as zero and the equation as linear
LINEAR_K0_TOL = 1e-12


def riccati_terms(params: MarketParams) -> Tuple[float, float, float]:
    """K₀, K₁, H exactly as grouped in the rewritten Riccati equation."""
    s = params.vol_sq_sum
    cross = params.cross
    gamma = params.gamma
    d = params.denominator
    k0 = (gamma * s * s - 2.0 * gamma**2 * cross * s) / d + (
        4.0 * gamma * cross * (s + cross)
    ) / d
    k1 = params.c * params.total_var / d
    h_coef = -params.c**2 / d
    return k0, k1, h_coef


def _is_linear(k0: float, k1: float, h_coef: float) -> bool:
    return abs(k0) <= LINEAR_K0_TOL * max(1.0, abs(k1), abs(h_coef))


def _build_coefficients(params: MarketParams) -> RiccatiCoeffs:
    k0, k1, h_coef = riccati_terms(params)
    delta = 4.0 * (k1 * k1 + h_coef * k0)
    ell = alpha1 = alpha2 = None
    if delta > 0.0 and not _is_linear(k0, k1, h_coef):
        half_root = 0.5 * np.sqrt(delta)
        alpha1 = (k1 + half_root) / k0
        alpha2 = (k1 - half_root) / k0
        if k1 - half_root != 0.0:
            ell = (k1 + half_root) / (k1 - half_root)
    return RiccatiCoeffs(
        k0=k0, k1=k1, h_coef=h_coef, delta=delta, ell=ell, alpha1=alpha1, alpha2=alpha2
    )


def coefficients(params: MarketParams) -> RiccatiCoeffs:
    """Derived scalars of the Riccati equation.

    Raises:
        DeltaNonpositive: Δ <= 0, so the closed form does not exist
        DegenerateEll: K₁ = √Δ/2 with K₀ ≠ 0
    """
    coeffs = _build_coefficients(params)
    if coeffs.delta <= 0.0:
        raise DeltaNonpositive(
            f"Delta = {coeffs.delta:.6g} <= 0 at gamma={params.gamma}, rho={params.rho}"
        )
    if coeffs.alpha1 is not None and coeffs.ell is None:
        raise DegenerateEll("K1 - sqrt(Delta)/2 vanishes")
    return coeffs


def _check_pole(coeffs: RiccatiCoeffs, horizon: float) -> None:
    # 1 - ℓe^{-√Δ(T-t)} vanishes on [0, T] iff ℓ lies in [1, e^{√Δ T}]
    if coeffs.ell is not None and 1.0 <= coeffs.ell <= np.exp(
        coeffs.sqrt_delta * horizon
    ):
        t_pole = horizon - np.log(coeffs.ell) / coeffs.sqrt_delta
        raise PoleOnInterval(f"Q has a pole at t = {t_pole:.6g} inside [0, T]")


def q_closed_form(coeffs: RiccatiCoeffs, params: MarketParams, t):
    """Q(t) = (α₁ - ℓα₂e) / (1 - ℓe) with e = exp(-√Δ(T-t)).

    Since ℓα₂ = α₁ the numerator is α₁(1 - e), which makes Q(T) = 0 exactly.
    """
    if coeffs.alpha1 is None:
        if _is_linear(coeffs.k0, coeffs.k1, coeffs.h_coef):
            return q_linear(coeffs, params, t)
        raise DeltaNonpositive(f"no closed form for Delta = {coeffs.delta:.6g}")
    if coeffs.ell is None:
        raise DegenerateEll("K1 - sqrt(Delta)/2 vanishes")
    _check_pole(coeffs, params.horizon)
    tau = params.horizon - np.asarray(t, dtype=float)
    decay = np.exp(-coeffs.sqrt_delta * tau)
    return coeffs.alpha1 * -np.expm1(-coeffs.sqrt_delta * tau) / (1.0 - coeffs.ell * decay)


def q_linear(coeffs: RiccatiCoeffs, params: MarketParams, t):
    """Q for K₀ = 0: the linear equation Q' = -2K₁Q - H with Q(T) = 0."""
    tau = params.horizon - np.asarray(t, dtype=float)
    if coeffs.k1 == 0.0:
        return coeffs.h_coef * tau
    return coeffs.h_coef * np.expm1(2.0 * coeffs.k1 * tau) / (2.0 * coeffs.k1)


def uniform_grid(horizon: float, n_steps: int) -> np.ndarray:
    return np.linspace(0.0, horizon, n_steps + 1)


def rk4_backward(
    rhs: Callable[[float, float], float],
    terminal: float,
    grid: np.ndarray,
    bound: float = np.inf,
) -> np.ndarray:
    """Fixed-step classical RK4 for y' = rhs(t, y) from y(grid[-1]) = terminal
    back to grid[0]. Returns y on every grid node.

    Raises:
        BlowupDetected: |y| exceeds `bound`
    """
    values = np.empty(grid.shape[0])
    values[-1] = terminal
    y = terminal
    for i in range(grid.shape[0] - 1, 0, -1):
        t = grid[i]
        h = grid[i - 1] - t
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(y) or abs(y) > bound:
            raise BlowupDetected(
                f"|y| exceeded {bound:.3g} near t = {grid[i - 1]:.6g} (finite-time escape)"
            )
        values[i - 1] = y
    return values


def q_numeric(
    params: MarketParams, n_steps: int, bound: float = DEFAULT_Q_BOUND
) -> Tuple[np.ndarray, np.ndarray]:
    """RK4 tabulation of Q on a uniform grid with `n_steps` intervals.

    Works for any sign of Δ and for K₀ = 0.
    """
    if n_steps < 2:
        raise ValueError(f"n_steps must be at least 2, got {n_steps}")
    k0, k1, h_coef = riccati_terms(params)
    grid = uniform_grid(params.horizon, n_steps)

    def rhs(t, q):
        return k0 * q * q - 2.0 * k1 * q - h_coef

    return grid, rk4_backward(rhs, 0.0, grid, bound=bound)


def f1_f2(coeffs: RiccatiCoeffs, params: MarketParams, q_value, t=None):
    """f₁ = -K₀Q + K₁ and f₂ = M(-γSQ + c)/D at the given Q value(s)."""
    q_value = np.asarray(q_value, dtype=float)
    f1 = -coeffs.k0 * q_value + coeffs.k1
    f2 = (
        params.excess_drift
        / params.denominator
        * (-params.gamma * params.vol_sq_sum * q_value + params.c)
    )
    return f1, f2


def phi_closed_form(
    params: MarketParams,
    coeffs: RiccatiCoeffs,
    q_evaluator: Callable,
    t: float,
    n_quad: int = DEFAULT_QUAD_NODES,
    f2_scale: float = 1.0,
) -> float:
    """φ(t) = ∫ₜᵀ f₂(s) exp{∫ₜˢ f₁} ds by composite Simpson on n_quad nodes.

    `f2_scale` multiplies f₂; φ is linear in it.
    """
    if t >= params.horizon:
        return 0.0
    s = np.linspace(t, params.horizon, n_quad)
    f1, f2 = f1_f2(coeffs, params, q_evaluator(s), s)
    f2 = f2_scale * f2
    # ∫ₜˢ f₁ for every node s
    growth = cumulative_simpson(f1, x=s, initial=0.0)
    return float(simpson(f2 * np.exp(growth), x=s))


def phi_numeric(
    params: MarketParams,
    q_tab: np.ndarray,
    n_steps: int,
    coeffs: RiccatiCoeffs = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """RK4 tabulation of φ on a uniform grid with `n_steps` intervals.

    `q_tab` holds Q on the refined grid with 2·n_steps intervals, so that every RK4
    midpoint is a node.
    """
    if q_tab.shape[0] != 2 * n_steps + 1:
        raise ValueError(
            f"q_tab must hold {2 * n_steps + 1} values (refined grid), got {q_tab.shape[0]}"
        )
    coeffs = coeffs or _build_coefficients(params)
    fine = uniform_grid(params.horizon, 2 * n_steps)
    grid = fine[::2]

    def rhs(t, phi):
        f1, f2 = f1_f2(coeffs, params, np.interp(t, fine, q_tab))
        return float(-f1 * phi - f2)

    return grid, rk4_backward(rhs, 0.0, grid)


@log_execution(logger=logger)
def solve(
    params: MarketParams,
    n_grid: int = DEFAULT_GRID,
    n_quad: int = DEFAULT_QUAD_NODES,
    q_bound: float = DEFAULT_Q_BOUND,
) -> ValueFunctions:
    """Q and φ on a uniform grid of `n_grid` intervals.

    Closed forms when Δ > 0 (or K₀ = 0) and Q has no pole on [0, T]; RK4 otherwise.
    """
    validate(params)
    coeffs = _build_coefficients(params)
    grid = uniform_grid(params.horizon, n_grid)

    q_source = "numeric"
    if _is_linear(coeffs.k0, coeffs.k1, coeffs.h_coef):
        q_source = "linear"
    elif coeffs.delta > 0.0 and coeffs.ell is not None:
        try:
            _check_pole(coeffs, params.horizon)
            q_source = "closed_form"
        except PoleOnInterval as e:
            logger.warning(f"{e}; integrating numerically")
    else:
        logger.warning(
            f"Delta = {coeffs.delta:.6g}: no closed form, integrating Q numerically"
        )

    q_exact: Optional[Callable] = None
    if q_source == "numeric":
        _, q_fine = q_numeric(params, 2 * n_grid, bound=q_bound)
        q_tab = q_fine[::2].copy()
        _, phi_tab = phi_numeric(params, q_fine, n_grid, coeffs=coeffs)
    else:
        evaluator = q_closed_form if q_source == "closed_form" else q_linear
        q_exact = functools.partial(evaluator, coeffs, params)
        q_tab = np.asarray(q_exact(grid), dtype=float)
        phi_tab = np.array(
            [phi_closed_form(params, coeffs, q_exact, t, n_quad=n_quad) for t in grid]
        )

    logger.debug(f"Q({grid[0]}) = {q_tab[0]:.8g}, phi = {phi_tab[0]:.8g} via {q_source}")
    return ValueFunctions(
        params=params,
        grid=grid,
        q_tab=q_tab,
        phi_tab=phi_tab,
        coeffs=coeffs,
        q_source=q_source,
        q_exact=q_exact,
    )


def value_offset(
    params: MarketParams, vf: ValueFunctions, t: float, n_quad: int = DEFAULT_QUAD_NODES
) -> float:
    """κ(t) = ∫ₜᵀ [½V(Q + γφ²) + r - (γSφ + M)²/(2D)] ds, the state-free part of the
    optimal log-value."""
    if t >= params.horizon:
        return 0.0
    s = np.linspace(t, params.horizon, n_quad)
    q = vf.q(s)
    phi = vf.phi(s)
    gamma_s = params.gamma * params.vol_sq_sum
    integrand = (
        0.5 * params.total_var * (q + params.gamma * phi**2)
        + params.r
        - (gamma_s * phi + params.excess_drift) ** 2 / (2.0 * params.denominator)
    )
    return float(simpson(integrand, x=s))


def optimal_value(params: MarketParams, vf: ValueFunctions, t: float, x) -> float:
    """J*(t, x) = exp{γ[½Q(t)x² + φ(t)x + κ(t)]}, the value of the feedback law."""
    x = np.asarray(x, dtype=float)
    log_value = 0.5 * vf.q(t) * x * x + vf.phi(t) * x + value_offset(params, vf, t)
    return np.exp(params.gamma * log_value)


def point_values(
    params: MarketParams, t: float, n_quad: int = DEFAULT_QUAD_NODES
) -> Tuple[float, float]:
    """Q(t) and φ(t) from the closed forms alone, without tabulating a grid.

    Raises:
        DeltaNonpositive, DegenerateEll, PoleOnInterval: no closed form on [0, T]
    """
    validate(params)
    coeffs = coefficients(params)
    if _is_linear(coeffs.k0, coeffs.k1, coeffs.h_coef):
        evaluator = q_linear
    else:
        evaluator = q_closed_form
        _check_pole(coeffs, params.horizon)

    def q_eval(s):
        return evaluator(coeffs, params, s)

    return float(q_eval(t)), phi_closed_form(params, coeffs, q_eval, t, n_quad=n_quad)
