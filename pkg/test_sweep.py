import numpy as np
import pytest

from risk_sensitive_portfolio.errors import SkippedPoint
from risk_sensitive_portfolio.models import MarketParams, SweepAxis, SweepSpec
from risk_sensitive_portfolio.sweep import (
    CSV_COLUMNS,
    figure_specs,
    gamma_grid,
    render_summary,
    rho_grid,
    sweep,
    sweep_point,
    sweep_state,
    to_frame,
)

REFERENCE = MarketParams()
FIGURES = figure_specs(REFERENCE)


def _series(result, value_key):
    """Rows grouped by the fixed parameter that does not move along the axis."""
    grouped = {}
    for row in result.rows:
        grouped.setdefault(getattr(row, value_key), []).append(row)
    return grouped


def test_grids():
    assert rho_grid() == [round(0.05 * k, 10) for k in range(1, 20)]
    # bound is 1 + 2ρσσ̄/(σ²+σ̄²) = 1.088 at ρ = 0.1
    grid = gamma_grid(REFERENCE.model_copy(update={"rho": 0.1}))
    assert grid[0] == 0.05 and grid[-1] == 1.05
    assert gamma_grid(REFERENCE.model_copy(update={"rho": 0.0}))[-1] == 0.95


def test_figure_presets():
    assert list(FIGURES) == ["fig1", "fig2", "fig3", "fig4"]
    assert len(FIGURES["fig1"]) == 9 and len(FIGURES["fig2"]) == 9
    assert {spec.k_offset for spec in FIGURES["fig3"]} == {0.5}
    assert {spec.eval_time for spec in FIGURES["fig4"]} == {0.5}


def test_sweep_state():
    assert sweep_state(REFERENCE, 0.0, 2.0) == pytest.approx(0.55)
    assert sweep_state(REFERENCE, 0.5, 0.5) == pytest.approx(0.775)
    assert sweep_state(REFERENCE, 0.5, 2.0) == pytest.approx(2.275)


def test_fig1_decreases_in_gamma():
    result = sweep(FIGURES["fig1"], name="fig1")
    for rows in _series(result, "rho").values():
        u = np.array([row.u for row in rows if row.gamma < 1.0])
        assert np.all(np.diff(u) < 0.0)


def test_fig2_increases_in_rho_for_moderate_gamma():
    result = sweep(FIGURES["fig2"], name="fig2")
    series = _series(result, "gamma")
    for gamma, rows in series.items():
        if gamma <= 0.7:
            u = np.array([row.u for row in rows])
            assert np.all(np.diff(u) > 0.0)
    assert series[0.9][0].u < 0.0


def test_fig4_short_positions():
    result = sweep(FIGURES["fig4"], name="fig4")
    assert result.rows
    assert all(row.u < 0.0 for row in result.rows)
    assert all(row.x == pytest.approx(2.275) for row in result.rows)


@pytest.mark.parametrize("gamma", [1.5, 1.0])
def test_uncorrelated_points_outside_region_skipped(gamma):
    fixed = REFERENCE.model_copy(update={"gamma": gamma})
    spec = SweepSpec(axis=SweepAxis.RHO, values=[0.0, 0.9], fixed=fixed)
    with pytest.raises(SkippedPoint):
        sweep_point(spec, 0.0)
    result = sweep(spec, name="edge")
    assert [row.value for row in result.rows] == [0.9]
    assert len(result.skipped) == 1


def test_csv_frame_is_deterministic():
    spec = SweepSpec(axis=SweepAxis.GAMMA, values=[0.1, 0.3, 0.5], fixed=REFERENCE)
    first = to_frame(sweep(spec, name="small"))
    second = to_frame(sweep(spec, name="small"))
    assert list(first.columns) == CSV_COLUMNS
    assert first.to_csv(index=False) == second.to_csv(index=False)
    assert first.loc[2, "u"] == pytest.approx(0.1943, abs=1e-4)


def test_render_summary_lists_skips():
    fixed = REFERENCE.model_copy(update={"gamma": 1.5})
    spec = SweepSpec(axis=SweepAxis.RHO, values=[0.0, 0.9], fixed=fixed)
    text = render_summary(sweep(spec, name="edge"))
    assert text.startswith("# Sweep summary: edge")
    assert "## Skipped points" in text
    assert "rho=0.0" in text
