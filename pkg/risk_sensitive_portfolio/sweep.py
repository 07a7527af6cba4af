"""Sensitivity sweeps of the optimal investment proportion over γ or ρ."""

from typing import Dict, List

import numpy as np
import pandas as pd

from .errors import ModelError, RiccatiError, SkippedPoint
from .model import solvability_bound, state_from_logprice
from .models import MarketParams, SweepAxis, SweepResult, SweepRow, SweepSpec
from .policy import feedback_gain, feedback_offset
from .riccati import point_values
from .utils.logger import get_logger, log_execution
from .utils.templates import ReportTemplates

logger = get_logger(__name__)

CSV_COLUMNS = ["axis", "value", "gamma", "rho", "t", "x", "u", "Q_t", "phi_t"]
GRID_STEP = 0.05


def _swept_params(spec: SweepSpec, value: float) -> MarketParams:
    field = "gamma" if spec.axis == SweepAxis.GAMMA else "rho"
    return spec.fixed.model_copy(update={field: value})


def sweep_state(params: MarketParams, t: float, k_offset: float) -> float:
    """x at time t when the log-price has moved by k since time 0 (m/c at t = 0)."""
    logprice = params.lbar0 + (k_offset if t > 0.0 else 0.0)
    return float(state_from_logprice(params, t, logprice))


def sweep_point(spec: SweepSpec, value: float) -> SweepRow:
    """Raises:
    SkippedPoint: invalid parameters or no closed-form solution at this value
    """
    params = _swept_params(spec, value)
    try:
        delta_positive, _ = solvability_bound(params)
        if not delta_positive:
            raise SkippedPoint(
                f"{spec.axis.value.lower()}={value}: solvability condition fails (Delta <= 0)"
            )
        q, phi = point_values(params, spec.eval_time)
    except (ModelError, RiccatiError) as e:
        raise SkippedPoint(f"{spec.axis.value.lower()}={value}: {e}") from e

    x = sweep_state(params, spec.eval_time, spec.k_offset)
    u = feedback_gain(params, q) * x + feedback_offset(params, phi)
    return SweepRow(
        axis=spec.axis,
        value=value,
        gamma=params.gamma,
        rho=params.rho,
        t=spec.eval_time,
        x=x,
        u=float(u),
        Q_t=q,
        phi_t=phi,
    )


@log_execution(logger=logger)
def sweep(specs: List[SweepSpec], name: str = "sweep") -> SweepResult:
    """Evaluate u at every axis value of every series, in order.

    Points without a solution are recorded in `skipped` and left out of the rows.
    """
    if isinstance(specs, SweepSpec):
        specs = [specs]
    rows, skipped = [], []
    for spec in specs:
        for value in spec.values:
            try:
                rows.append(sweep_point(spec, value))
            except SkippedPoint as e:
                logger.warning(f"{name}: skipped {e}")
                skipped.append(str(e))
    return SweepResult(name=name, specs=specs, rows=rows, skipped=skipped)


def gamma_grid(params: MarketParams, step: float = GRID_STEP) -> List[float]:
    """step, 2·step, ... strictly below the γ bound of the Δ > 0 region."""
    _, upper = solvability_bound(params)
    if upper is None:
        upper = 1.0
    count = int(np.ceil(upper / step - 1e-9)) - 1
    return [round(step * k, 10) for k in range(1, count + 1)]


def rho_grid(step: float = GRID_STEP) -> List[float]:
    """Interior grid of (0, 1)."""
    return [round(step * k, 10) for k in range(1, int(round(1.0 / step)))]


def figure_specs(base: MarketParams = None) -> Dict[str, List[SweepSpec]]:
    """The four sensitivity studies of the reference market.

    fig1: u(0) over γ, one series per ρ in 0.1..0.9
    fig2: u(0) over ρ, one series per γ in 0.1..0.9
    fig3: u(0.5) over ρ after a log-return of 0.5
    fig4: u(0.5) over ρ after a log-return of 2
    """
    base = base or MarketParams()
    tenths = [round(0.1 * k, 10) for k in range(1, 10)]
    fig1 = []
    for rho in tenths:
        fixed = base.model_copy(update={"rho": rho})
        fig1.append(SweepSpec(axis=SweepAxis.GAMMA, values=gamma_grid(fixed), fixed=fixed))
    fig2 = [
        SweepSpec(axis=SweepAxis.RHO, values=rho_grid(), fixed=base.model_copy(update={"gamma": g}))
        for g in tenths
    ]

    def mid_horizon(k: float) -> List[SweepSpec]:
        return [
            SweepSpec(
                axis=SweepAxis.RHO,
                values=rho_grid(),
                fixed=base.model_copy(update={"gamma": g}),
                eval_time=0.5 * base.horizon,
                k_offset=k,
            )
            for g in (0.1, 0.3, 0.5, 0.7, 0.9)
        ]

    return {"fig1": fig1, "fig2": fig2, "fig3": mid_horizon(0.5), "fig4": mid_horizon(2.0)}


def to_frame(result: SweepResult) -> pd.DataFrame:
    records = [row.model_dump(mode="json") for row in result.rows]
    return pd.DataFrame.from_records(records, columns=CSV_COLUMNS)


def render_summary(result: SweepResult) -> str:
    first = result.specs[0]
    return ReportTemplates("sweep").summary.render(
        name=result.name,
        axis=first.axis.value,
        eval_time=first.eval_time,
        k_offset=first.k_offset,
        n_rows=len(result.rows),
        skipped=result.skipped,
    )
