import json
import logging
import math

import pandas as pd
import pytest

from risk_sensitive_portfolio.cli import EXIT_ERROR, build_parser, config_from_args, load_config, main
from risk_sensitive_portfolio.errors import ConfigParse, UnknownSubcommand
from risk_sensitive_portfolio import riccati
from risk_sensitive_portfolio.models import Measure
from risk_sensitive_portfolio.utils.logger import reconfigure_loggers


def _write_config(path, payload):
    path.write_text(json.dumps(payload))
    return path


def test_parser_maps_market_flags():
    args = build_parser().parse_args(
        ["simulate", "--sigma-bar", "0.4", "--gamma", "0.3", "--measure", "P_TILDE", "--paths", "10"]
    )
    config = config_from_args(args)
    assert config.params.sigma_bar == 0.4
    assert config.params.gamma == 0.3
    assert config.params.sigma == 0.5
    assert config.sim.measure == Measure.P_TILDE
    assert config.sim.n_paths == 10


def test_solve_writes_tables_and_manifest(tmp_path):
    assert main(["solve", "--grid", "100", "--out-dir", str(tmp_path)]) == 0
    q_table = pd.read_csv(tmp_path / "Q.csv")
    phi_table = pd.read_csv(tmp_path / "phi.csv")
    assert list(q_table.columns) == ["t", "Q"]
    assert list(phi_table.columns) == ["t", "phi"]
    assert len(q_table) == len(phi_table) == 101
    assert q_table["Q"].iloc[0] == pytest.approx(1.34798, abs=1e-4)
    assert q_table["Q"].iloc[-1] == 0.0
    assert phi_table["phi"].iloc[0] == pytest.approx(-1.36088, abs=1e-4)
    solution = json.loads((tmp_path / "solution.json").read_text())
    assert {"grid", "Q", "phi", "coefficients", "q_source"} <= set(solution)
    assert solution["q_source"] == "closed_form"
    assert len(solution["grid"]) == len(solution["Q"]) == len(solution["phi"]) == 101
    assert solution["Q"][0] == pytest.approx(q_table["Q"].iloc[0], abs=1e-10)
    assert solution["coefficients"]["k1"] == pytest.approx(-1.73913, abs=1e-5)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["cmd"] == "solve"
    assert manifest["outputs"] == ["solution.json", "Q.csv", "phi.csv"]
    assert len(manifest["params_sha256"]) == 64
    assert set(manifest["versions"]) == {"risk-sensitive-portfolio", "numpy", "scipy", "pandas"}


def test_policy_table(tmp_path, capsys):
    argv = ["policy", "--times", "0", "0.5", "--states", "0.55", "1.0", "--out-dir", str(tmp_path)]
    assert main(argv) == 0
    table = pd.read_csv(tmp_path / "policy.csv")
    assert len(table) == 4
    assert table.loc[0, "u"] == pytest.approx(0.1943, abs=1e-4)
    assert "t,a,b,x,u" in capsys.readouterr().out


def test_simulate_bond_only(tmp_path):
    argv = ["simulate", "--policy", "zero", "--paths", "100", "--steps", "50", "--save-paths"]
    assert main(argv + ["--out-dir", str(tmp_path)]) == 0
    estimate = json.loads((tmp_path / "estimate.json").read_text())
    assert estimate["mean"] == pytest.approx(math.exp(0.025), abs=1e-12)
    assert estimate["measure"] == "P"
    assert len(pd.read_csv(tmp_path / "paths.csv")) == 100


def test_sweep_writes_figures(tmp_path):
    assert main(["sweep", "--out-dir", str(tmp_path)]) == 0
    for name in ("fig1", "fig2", "fig3", "fig4"):
        assert (tmp_path / f"{name}.csv").exists()
    summary = (tmp_path / "summary.md").read_text()
    assert summary.count("# Sweep summary") == 4


def test_run_config_sweep_family(tmp_path):
    config = _write_config(
        tmp_path / "config.json",
        {
            "cmd": "sweep",
            "out_dir": str(tmp_path / "out"),
            "sweeps": {"gammas": [{"axis": "GAMMA", "values": [0.2, 0.4]}]},
        },
    )
    assert main(["run", str(config)]) == 0
    table = pd.read_csv(tmp_path / "out" / "gammas.csv")
    assert table["value"].tolist() == [0.2, 0.4]


def test_run_config_rejects_zero_gamma(tmp_path):
    config = _write_config(
        tmp_path / "config.json",
        {"cmd": "solve", "params": {"gamma": 0.0}, "out_dir": str(tmp_path / "out")},
    )
    assert main(["run", str(config)]) == EXIT_ERROR


def test_unknown_command(tmp_path):
    config = _write_config(tmp_path / "config.json", {"cmd": "optimize"})
    with pytest.raises(UnknownSubcommand):
        load_config(config)
    assert main(["run", str(config)]) == EXIT_ERROR


def test_malformed_config(tmp_path):
    config = tmp_path / "config.json"
    config.write_text("{not json")
    with pytest.raises(ConfigParse):
        load_config(config)
    assert main(["run", str(config)]) == EXIT_ERROR
    _write_config(config, {"cmd": "solve", "params": {"gama": 0.5}})
    with pytest.raises(ConfigParse):
        load_config(config)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["solve", "--grid", "10", "--out-dir", str(blocker / "sub")]) == EXIT_ERROR


def test_small_verify_run(tmp_path):
    argv = ["verify", "--paths", "100", "--steps", "20", "--grid", "100", "--out-dir", str(tmp_path)]
    status = main(argv)
    reports = json.loads((tmp_path / "verification.json").read_text())
    assert len(reports) == 7
    gated_failure = any(report["gated"] and not report["passed"] for report in reports)
    assert status == (1 if gated_failure else 0)
    assert (tmp_path / "summary.md").exists()


def test_dotenv_in_working_directory_configures_logging(tmp_path, monkeypatch):
    for name in ("LOG_LEVEL", "SAVE_LOG_FILE", "LOG_DIR"):
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    log_dir = tmp_path / "run_logs"
    (tmp_path / ".env").write_text(f"LOG_LEVEL=WARNING\nSAVE_LOG_FILE=1\nLOG_DIR={log_dir}\n")
    monkeypatch.chdir(tmp_path)
    try:
        assert main(["solve", "--grid", "10", "--out-dir", str(tmp_path / "out")]) == 0
        assert riccati.logger.level == logging.WARNING
        assert (log_dir / "risk_sensitive_portfolio.riccati.log").exists()
    finally:
        monkeypatch.undo()
        reconfigure_loggers()
