"""Euler-Maruyama simulation of the market under both measures and Monte Carlo estimates
of the exponential-of-integral criterion and the HARA utility.

Paths are simulated in blocks of `SimConfig.block_size`; blocks may run on a thread pool
and are reduced in block order.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import SimulationError, WealthNonpositive
from .model import running_cost, state_from_logprice, validate
from .models import Estimate, MarketParams, Measure, PathEnsemble, SimConfig
from .rng import block_normals
from .utils.logger import get_logger, log_execution

logger = get_logger(__name__)

Policy = Callable[[float, np.ndarray], np.ndarray]


def correlate(rho: float, dt: float, z1, z2) -> Tuple[np.ndarray, np.ndarray]:
    """Map independent standard normals to increments with Cov(dW₁, dW₂) = ρ·dt."""
    root_dt = np.sqrt(dt)
    return root_dt * z1, root_dt * (rho * z1 + np.sqrt(1.0 - rho * rho) * z2)


def correlated_increments(
    rho: float, dt: float, stream: np.random.Generator, size=None
) -> Tuple[np.ndarray, np.ndarray]:
    shape = (2,) if size is None else (*np.atleast_1d(size), 2)
    z = stream.standard_normal(shape)
    return correlate(rho, dt, z[..., 0], z[..., 1])


def time_grid(params: MarketParams, cfg: SimConfig) -> Tuple[np.ndarray, float]:
    return np.linspace(0.0, params.horizon, cfg.n_steps + 1), params.horizon / cfg.n_steps


def _block_bounds(cfg: SimConfig) -> List[Tuple[int, int]]:
    return [
        (start, min(start + cfg.block_size, cfg.n_paths))
        for start in range(0, cfg.n_paths, cfg.block_size)
    ]


def _run_blocks(cfg: SimConfig, block_fn: Callable[[int, int], dict]) -> List[dict]:
    bounds = _block_bounds(cfg)
    if cfg.workers == 1 or len(bounds) == 1:
        return [block_fn(start, stop) for start, stop in bounds]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda bound: block_fn(*bound), bounds))


def _gather(blocks: List[dict], key: str) -> Optional[np.ndarray]:
    if blocks[0].get(key) is None:
        return None
    return np.concatenate([block[key] for block in blocks])


def _as_controls(policy: Policy, t: float, x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(policy(t, x), dtype=float), x.shape)


def _block_increments(params, cfg, start, stop, dt):
    z = block_normals(cfg.seed, start, stop, cfg.n_steps)
    return correlate(params.rho, dt, z[..., 0], z[..., 1])


def _reduced_block(params, policy, cfg, start, stop, probe_factory) -> dict:
    times, dt = time_grid(params, cfg)
    n = stop - start
    dw1, dw2 = _block_increments(params, cfg, start, stop, dt)
    gamma_s = params.gamma * params.vol_sq_sum

    x = np.full(n, params.m / params.c)
    integral = np.zeros(n)
    states = np.empty((n, cfg.n_steps + 1)) if cfg.record_paths else None
    controls = np.empty((n, cfg.n_steps)) if cfg.record_paths else None
    probe = probe_factory() if probe_factory is not None else None
    max_u_sq = 0.0

    for i in range(cfg.n_steps):
        t = times[i]
        u = _as_controls(policy, t, x)
        max_u_sq = max(max_u_sq, float(np.max(u * u)))
        integral += running_cost(params, x, u) * dt
        x_next = (
            x
            + (-params.c * x + gamma_s * u) * dt
            + params.sigma * dw1[:, i]
            + params.sigma_bar * dw2[:, i]
        )
        if probe is not None:
            probe.step(t, times[i + 1], x, u, dw1[:, i], dw2[:, i], x_next)
        if states is not None:
            states[:, i] = x
            controls[:, i] = u
        x = x_next
    if states is not None:
        states[:, -1] = x

    return {
        "terminal_state": x,
        "integrals": integral,
        "states": states,
        "controls": controls,
        "increments": np.stack([dw1, dw2], axis=-1) if cfg.record_increments else None,
        "max_u_sq": max_u_sq,
        "probe": probe,
    }


def _original_block(params, policy, cfg, start, stop) -> dict:
    times, dt = time_grid(params, cfg)
    n = stop - start
    dw1, dw2 = _block_increments(params, cfg, start, stop, dt)
    var = params.total_var
    gamma = params.gamma

    logprice = np.full(n, params.trend(0.0))
    log_wealth = np.full(n, np.log(params.x0))
    rn_exponent = np.zeros(n)
    states = np.empty((n, cfg.n_steps + 1)) if cfg.record_paths else None
    wealth = np.empty((n, cfg.n_steps + 1)) if cfg.record_paths else None
    controls = np.empty((n, cfg.n_steps)) if cfg.record_paths else None
    max_u_sq = 0.0

    for i in range(cfg.n_steps):
        t = times[i]
        u = _as_controls(policy, t, state_from_logprice(params, t, logprice))
        max_u_sq = max(max_u_sq, float(np.max(u * u)))
        noise = params.sigma * dw1[:, i] + params.sigma_bar * dw2[:, i]
        drift = params.c * (params.trend(t) - logprice)
        if states is not None:
            states[:, i] = logprice
            wealth[:, i] = np.exp(log_wealth)
            controls[:, i] = u
        # d log X by Itô: (1-u)r + u(dL/dt + ½V) - ½u²V
        log_wealth += ((1.0 - u) * params.r + u * (drift + 0.5 * var) - 0.5 * u * u * var) * dt
        log_wealth += u * noise
        rn_exponent += gamma * u * noise - 0.5 * gamma**2 * params.vol_sq_sum * u * u * dt
        logprice = logprice + drift * dt + noise
    if states is not None:
        states[:, -1] = logprice
        wealth[:, -1] = np.exp(log_wealth)

    return {
        "terminal_state": logprice,
        "log_wealth": log_wealth,
        "rn_weights": np.exp(rn_exponent),
        "states": states,
        "wealth": wealth,
        "controls": controls,
        "increments": np.stack([dw1, dw2], axis=-1) if cfg.record_increments else None,
        "max_u_sq": max_u_sq,
    }


@log_execution(logger=logger)
def simulate_reduced(
    params: MarketParams,
    policy: Policy,
    cfg: SimConfig,
    check: bool = True,
    probe_factory: Optional[Callable] = None,
) -> PathEnsemble:
    """Reduced state x(t) under P from x(0) = m/c, with the left-endpoint ∫₀ᵀ h dt.

    `check=False` skips parameter validation (degenerate test builds such as σ = 0).
    `probe_factory`, if given, builds one observer per block whose
    `step(t, t_next, x, u, dw1, dw2, x_next)` is called on every Euler step.
    """
    if check:
        validate(params)
    times, _ = time_grid(params, cfg)
    blocks = _run_blocks(
        cfg, lambda start, stop: _reduced_block(params, policy, cfg, start, stop, probe_factory)
    )
    return PathEnsemble(
        measure=Measure.P,
        seed=cfg.seed,
        times=times,
        states=_gather(blocks, "states"),
        controls=_gather(blocks, "controls"),
        increments=_gather(blocks, "increments"),
        terminal_state=_gather(blocks, "terminal_state"),
        integrals=_gather(blocks, "integrals"),
        max_control_sq=max(block["max_u_sq"] for block in blocks),
        probes=[block["probe"] for block in blocks] if probe_factory is not None else None,
    )


@log_execution(logger=logger)
def simulate_original(
    params: MarketParams, policy: Policy, cfg: SimConfig, check: bool = True
) -> PathEnsemble:
    """Log-price L(t) and wealth X(t) under P̃, with u read at x = L - L̄ + m/c.

    Wealth is integrated in log space. Paths whose log-wealth is not finite are flagged.
    """
    if check:
        validate(params)
    times, _ = time_grid(params, cfg)
    blocks = _run_blocks(
        cfg, lambda start, stop: _original_block(params, policy, cfg, start, stop)
    )
    log_wealth = _gather(blocks, "log_wealth")
    flagged = ~np.isfinite(log_wealth)
    if flagged.any():
        logger.warning(f"{int(flagged.sum())} paths left (0, inf) numerically and are flagged")
    return PathEnsemble(
        measure=Measure.P_TILDE,
        seed=cfg.seed,
        times=times,
        states=_gather(blocks, "states"),
        wealth=_gather(blocks, "wealth"),
        controls=_gather(blocks, "controls"),
        increments=_gather(blocks, "increments"),
        terminal_state=_gather(blocks, "terminal_state"),
        log_wealth=log_wealth,
        flagged=flagged,
        rn_weights=_gather(blocks, "rn_weights"),
        max_control_sq=max(block["max_u_sq"] for block in blocks),
    )


def summarize(values: np.ndarray, excluded: int = 0) -> Estimate:
    """Sample mean and standard error."""
    n = int(values.shape[0])
    std_error = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    if not np.isfinite(std_error):
        std_error = float("inf")
    return Estimate(mean=float(np.mean(values)), std_error=std_error, n=n, excluded=excluded)


def cost_samples(
    params: MarketParams, policy: Policy, cfg: SimConfig, check: bool = True
) -> np.ndarray:
    """Per-path exp{γ∫₀ᵀ h dt} under P."""
    ensemble = simulate_reduced(params, policy, cfg, check=check)
    return np.exp(params.gamma * ensemble.integrals)


def estimate_J(
    params: MarketParams, policy: Policy, cfg: SimConfig, check: bool = True
) -> Estimate:
    """J = E[exp{γ∫₀ᵀ h(x(t), u(t)) dt}]"""
    if cfg.measure != Measure.P:
        raise SimulationError(f"estimate_J simulates under P, got measure {cfg.measure.value}")
    return summarize(cost_samples(params, policy, cfg, check=check))


def hara_samples(
    params: MarketParams, policy: Policy, cfg: SimConfig, check: bool = True
) -> Tuple[np.ndarray, int]:
    """Per-path X(T)^γ over unflagged paths, and the number of flagged paths."""
    ensemble = simulate_original(params, policy, cfg, check=check)
    powered = np.exp(params.gamma * ensemble.log_wealth)
    usable = ~ensemble.flagged & np.isfinite(powered)
    if not usable.any():
        raise WealthNonpositive(f"all {ensemble.n_paths} wealth paths were flagged")
    return powered[usable], int((~usable).sum())


def estimate_hara(
    params: MarketParams, policy: Policy, cfg: SimConfig, check: bool = True
) -> Estimate:
    """J̃ = (1/γ)Ẽ[X(T)^γ]; flagged paths are excluded and counted."""
    if cfg.measure != Measure.P_TILDE:
        raise SimulationError(
            f"estimate_hara simulates under P_TILDE, got measure {cfg.measure.value}"
        )
    powered, excluded = hara_samples(params, policy, cfg, check=check)
    return summarize(powered / params.gamma, excluded=excluded)


def girsanov_weight(
    params: MarketParams,
    controls: np.ndarray,
    increments: np.ndarray,
    dt: float,
    cross_term: bool = False,
) -> np.ndarray:
    """Pathwise dP/dP̃ = exp{γ∫u(σdW̃ + σ̄dW̄) - ½γ²v∫u²dt}.

    v is σ² + σ̄² by default. With `cross_term=True` v is σ² + σ̄² + 2ρσσ̄, the quadratic
    variation rate of σW̃ + σ̄W̄.
    """
    var = params.total_var if cross_term else params.vol_sq_sum
    noise = params.sigma * increments[..., 0] + params.sigma_bar * increments[..., 1]
    stochastic = params.gamma * np.sum(controls * noise, axis=-1)
    compensator = 0.5 * params.gamma**2 * var * np.sum(controls * controls, axis=-1) * dt
    return np.exp(stochastic - compensator)
