"""Machine checks of the solution: Riccati residual, FBSDE consistency of the adjoint
ansatz, optimality of the feedback law under perturbation, the change-of-measure
identity, the exponential-moment bound and the closed-form optimal value.
"""

import json
import math
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import NonconvexH
from .mc import (
    cost_samples,
    estimate_J,
    hara_samples,
    simulate_original,
    simulate_reduced,
    summarize,
)
from .models import MarketParams, Measure, RiccatiCoeffs, SimConfig, ValueFunctions
from .models import VerificationReport
from .policy import FeedbackPolicy, PerturbedPolicy, minimizer_check
from .riccati import optimal_value, solve, uniform_grid
from .utils.logger import get_logger, log_as_yaml, log_execution
from .utils.templates import ReportTemplates

logger = get_logger(__name__)

FBSDE_TOLERANCE = 10.0
PERTURBATION_TOLERANCE = 2.0
CONSISTENCY_TOLERANCE = 3.0
VALUE_BIAS_ALLOWANCE = 0.01
RESIDUAL_BASE_NODES = 1000
RESIDUAL_MAX_NODES = 1_000_000


def _z_score(difference: float, std_error: float) -> float:
    if std_error > 0.0:
        return difference / std_error
    if difference == 0.0:
        return 0.0
    return math.copysign(math.inf, difference)


def riccati_residual(
    vf: ValueFunctions,
    coeffs: Optional[RiccatiCoeffs] = None,
    grid: Optional[np.ndarray] = None,
    q_values: Optional[np.ndarray] = None,
    tolerance: Optional[float] = None,
) -> VerificationReport:
    """Max over interior nodes of |Q̇ - K₀Q² + 2K₁Q + H| with Q̇ by centered differences.

    When Q has a closed form and no grid or values are given, the residual is taken on
    a grid refined in proportion to Δ·T².
    """
    coeffs = coeffs or vf.coeffs
    if grid is None and q_values is None and vf.q_exact is not None:
        horizon = vf.params.horizon
        scale = max(1.0, coeffs.delta * horizon**2)
        n_steps = min(RESIDUAL_MAX_NODES, math.ceil(RESIDUAL_BASE_NODES * scale))
        grid = uniform_grid(horizon, max(vf.grid.shape[0] - 1, n_steps))
    grid = vf.grid if grid is None else np.asarray(grid, dtype=float)
    q = vf.q(grid) if q_values is None else np.asarray(q_values, dtype=float)
    if tolerance is None:
        tolerance = 1e-5 * (1.0 + abs(coeffs.h_coef))

    q_dot = (q[2:] - q[:-2]) / (grid[2:] - grid[:-2])
    inner = q[1:-1]
    residual = q_dot - coeffs.k0 * inner**2 + 2.0 * coeffs.k1 * inner + coeffs.h_coef
    worst = int(np.argmax(np.abs(residual)))
    return VerificationReport.judge(
        "riccati_residual",
        float(np.abs(residual[worst])),
        tolerance,
        details=f"worst node t = {grid[worst + 1]:.6g} of {grid.shape[0]} grid nodes",
    )


class FbsdeProbe:
    """Accumulates the one-step residual

        Δp̄ - [γp̄((q̄₁+ρq̄₂)σ + (q̄₂+ρq̄₁)σ̄) + cp̄ - cu]Δt - q̄₁ΔW₁ - q̄₂ΔW₂

    of the adjoint equation along each path, with (p̄, q̄₁, q̄₂) from the ansatz.
    """

    def __init__(self, params: MarketParams, vf: ValueFunctions):
        self.params = params
        self.vf = vf
        self.accumulated = None
        self.sum_sq = 0.0
        self.count = 0
        self.terminal_p = None

    def step(self, t, t_next, x, u, dw1, dw2, x_next):
        params = self.params
        q_now, q_next = self.vf.q(t), self.vf.q(t_next)
        p = -q_now * x - self.vf.phi(t)
        p_next = -q_next * x_next - self.vf.phi(t_next)
        q1 = -params.sigma * q_now
        q2 = -params.sigma_bar * q_now
        drift = (
            params.gamma
            * p
            * ((q1 + params.rho * q2) * params.sigma + (q2 + params.rho * q1) * params.sigma_bar)
            + params.c * p
            - params.c * u
        )
        residual = p_next - p - drift * (t_next - t) - q1 * dw1 - q2 * dw2
        if self.accumulated is None:
            self.accumulated = np.zeros_like(residual)
        self.accumulated += residual
        self.sum_sq += float(np.sum(residual * residual))
        self.count += residual.shape[0]
        self.terminal_p = p_next


@log_execution(logger=logger)
def fbsde_residual(
    params: MarketParams,
    vf: ValueFunctions,
    cfg: SimConfig,
    tolerance: float = FBSDE_TOLERANCE,
) -> VerificationReport:
    """Ensemble RMS of the path-accumulated adjoint residual, divided by dt.

    The one-step residual is O(dt^{3/2}); its sum along a path is O(dt), so the metric
    stays bounded as dt shrinks.
    """
    ensemble = simulate_reduced(
        params,
        FeedbackPolicy(params, vf),
        cfg.model_copy(update={"measure": Measure.P, "record_paths": False}),
        probe_factory=lambda: FbsdeProbe(params, vf),
    )
    probes: List[FbsdeProbe] = ensemble.probes
    accumulated = np.concatenate([probe.accumulated for probe in probes])
    terminal_p = np.concatenate([probe.terminal_p for probe in probes])
    dt = params.horizon / cfg.n_steps
    path_rms = float(np.sqrt(np.mean(accumulated**2)))
    step_rms = math.sqrt(sum(probe.sum_sq for probe in probes) / sum(p.count for p in probes))
    return VerificationReport.judge(
        "fbsde_residual",
        path_rms / dt,
        tolerance,
        details=(
            f"dt = {dt:.3g}; path-accumulated RMS = {path_rms:.4g}; "
            f"per-step RMS = {step_rms:.4g}; max |p(T)| = {float(np.max(np.abs(terminal_p))):.3g}"
        ),
    )


def perturbation_family(params: MarketParams, eps: float) -> List[Tuple[str, Callable]]:
    """Fourteen shifts δ(t, x): ±ε, ±ε·sin(kπt/T) for k = 1..3, ±ε·x, ±ε·t/T, ±ε·x(1 - t/T)."""
    horizon = params.horizon
    shapes = [
        ("const", lambda t, x: np.ones_like(x)),
        *[
            (f"sin{k}", lambda t, x, k=k: np.full_like(x, math.sin(k * math.pi * t / horizon)))
            for k in (1, 2, 3)
        ],
        ("gain", lambda t, x: x),
        ("ramp", lambda t, x: np.full_like(x, t / horizon)),
        ("decaying_gain", lambda t, x: x * (1.0 - t / horizon)),
    ]
    family = []
    for name, shape in shapes:
        for sign, prefix in ((1.0, "+"), (-1.0, "-")):
            family.append(
                (f"{prefix}{name}", lambda t, x, s=shape, a=sign * eps: a * s(t, x))
            )
    return family


@log_execution(logger=logger)
def perturbation_optimality(
    params: MarketParams,
    vf: ValueFunctions,
    cfg: SimConfig,
    eps: float = 0.1,
    tolerance: float = PERTURBATION_TOLERANCE,
    base_policy: Optional[Callable] = None,
) -> VerificationReport:
    """Largest improvement of sign(γ)·J over the base policy, in standard errors.

    Every member of the perturbation family is simulated on the same random numbers as
    the base policy.
    """
    cfg = cfg.model_copy(update={"measure": Measure.P})
    base = base_policy or FeedbackPolicy(params, vf)
    sign = math.copysign(1.0, params.gamma)
    base_samples = cost_samples(params, base, cfg)

    worst_name, worst = "", -math.inf
    lines = []
    for name, shift in perturbation_family(params, eps):
        perturbed = cost_samples(params, PerturbedPolicy(base, shift, name), cfg)
        difference = summarize(sign * (perturbed - base_samples))
        z = _z_score(difference.mean, difference.std_error)
        lines.append(f"{name}: {z:+.3f} SE")
        if z > worst:
            worst_name, worst = name, z
    return VerificationReport.judge(
        "perturbation_optimality",
        worst,
        tolerance,
        details=f"eps = {eps}; worst {worst_name}\n" + "\n".join(lines),
    )


@log_execution(logger=logger)
def measure_consistency(
    params: MarketParams,
    vf: ValueFunctions,
    cfg: SimConfig,
    policy: Optional[Callable] = None,
    tolerance: float = CONSISTENCY_TOLERANCE,
) -> VerificationReport:
    """|Ẽ[X(T)^γ] - x₀^γ·E[exp{γ∫h}]| in combined standard errors, on independent seeds.

    Gated only for ρ = 0; for correlated noises the report is adjudication output.
    """
    policy = policy or FeedbackPolicy(params, vf)
    reduced = cost_samples(params, policy, cfg.model_copy(update={"measure": Measure.P}))
    tilde_cfg = cfg.model_copy(
        update={"measure": Measure.P_TILDE, "seed": (cfg.seed + 1) % 2**64}
    )
    powered, excluded = hara_samples(params, policy, tilde_cfg)

    scale = params.x0**params.gamma
    tilde, base = summarize(powered), summarize(scale * reduced)
    lhs, rhs = tilde.mean, base.mean
    se_lhs, se_rhs = tilde.std_error, base.std_error
    combined = math.hypot(se_lhs, se_rhs)
    difference = abs(lhs - rhs)
    # round-off level gaps of deterministic runs count as agreement
    if difference <= 1e-12 * max(1.0, abs(rhs)):
        difference = 0.0

    return VerificationReport.judge(
        "measure_consistency",
        abs(_z_score(difference, combined)),
        tolerance,
        gated=params.rho == 0.0,
        details=(
            f"E~[X(T)^gamma] = {lhs:.6g} +- {se_lhs:.3g}; "
            f"x0^gamma E[exp(gamma int h)] = {rhs:.6g} +- {se_rhs:.3g}; "
            f"excluded paths = {excluded}"
        ),
    )


@log_execution(logger=logger)
def novikov_check(
    params: MarketParams, policy: Callable, cfg: SimConfig, beta: float = 1.0
) -> VerificationReport:
    """Empirical max of (γσu)² + (γσ̄u)² over simulated paths and the implied bound
    C = exp(β·max). Informational; never fails."""
    ensemble = simulate_original(
        params, policy, cfg.model_copy(update={"measure": Measure.P_TILDE})
    )
    bound = params.gamma**2 * params.vol_sq_sum * ensemble.max_control_sq
    return VerificationReport.judge(
        "novikov_check",
        bound,
        math.inf,
        gated=False,
        details=f"max (gamma sigma u)^2 + (gamma sigma_bar u)^2 = {bound:.6g}; "
        f"C = exp(beta * max) = {float(np.exp(beta * bound)):.6g} for beta = {beta}",
    )


@log_execution(logger=logger)
def value_consistency(
    params: MarketParams,
    vf: ValueFunctions,
    cfg: SimConfig,
    tolerance: float = CONSISTENCY_TOLERANCE,
    bias: float = VALUE_BIAS_ALLOWANCE,
) -> VerificationReport:
    """Monte Carlo J of the feedback law against the closed-form J*(0, m/c), in standard
    errors beyond a relative Euler-bias allowance."""
    exact = float(optimal_value(params, vf, 0.0, params.m / params.c))
    estimate = estimate_J(
        params, FeedbackPolicy(params, vf), cfg.model_copy(update={"measure": Measure.P})
    )
    excess = max(0.0, abs(estimate.mean - exact) - bias * abs(exact))
    return VerificationReport.judge(
        "value_consistency",
        abs(_z_score(excess, estimate.std_error)),
        tolerance,
        details=f"J* = {exact:.6g}; Monte Carlo J = {estimate.mean:.6g} +- {estimate.std_error:.3g}",
    )


class VerificationSuite:
    """Solves once and runs every check in a fixed order."""

    def __init__(
        self,
        params: MarketParams,
        cfg: SimConfig,
        n_grid: int = 1000,
        eps: float = 0.1,
        minimizer_samples: int = 100,
    ):
        self.params = params
        self.cfg = cfg
        self.n_grid = n_grid
        self.eps = eps
        self.minimizer_samples = minimizer_samples
        self.templates = ReportTemplates("verify")

    def _minimizer_report(self, vf: ValueFunctions) -> VerificationReport:
        try:
            report = minimizer_check(
                self.params, vf, samples=self.minimizer_samples, seed=self.cfg.seed
            )
        except NonconvexH as e:
            return VerificationReport.judge("minimizer_identity", math.inf, 0.0, details=str(e))
        return VerificationReport.judge(
            "minimizer_identity",
            report.max_deviation,
            report.tolerance,
            details=f"{report.samples} random (t, x) points",
        )

    @log_execution(logger=logger)
    def run(self) -> List[VerificationReport]:
        vf = solve(self.params, n_grid=self.n_grid)
        feedback_policy = FeedbackPolicy(self.params, vf)
        stages = [
            lambda: riccati_residual(vf),
            lambda: self._minimizer_report(vf),
            lambda: fbsde_residual(self.params, vf, self.cfg),
            lambda: perturbation_optimality(self.params, vf, self.cfg, eps=self.eps),
            lambda: measure_consistency(self.params, vf, self.cfg),
            lambda: value_consistency(self.params, vf, self.cfg),
            lambda: novikov_check(self.params, feedback_policy, self.cfg),
        ]
        reports = []
        for stage in stages:
            report = stage()
            log_as_yaml(logger, report)
            reports.append(report)
        return reports

    def render_summary(self, reports: List[VerificationReport]) -> str:
        return self.templates.summary.render(
            params_json=json.dumps(self.params.model_dump(), sort_keys=True),
            seed=self.cfg.seed,
            n_paths=self.cfg.n_paths,
            n_steps=self.cfg.n_steps,
            reports=reports,
            gated_failures=sum(1 for r in reports if r.gated and not r.passed),
        )
