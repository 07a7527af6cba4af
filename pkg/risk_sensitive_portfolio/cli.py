"""Command line entry point: `rsp solve|policy|simulate|sweep|verify|run`.

Every subcommand is turned into a `RunConfig` and executed the same way `run <config.json>`
executes a config file. Outputs go to `--out-dir` together with a `manifest.json`.
"""

import argparse
import hashlib
import json
import sys
from datetime import datetime
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
import pytz
import scipy
from dotenv import find_dotenv, load_dotenv
from pydantic import ValidationError

from . import __version__
from .errors import ConfigParse, OutputUnwritable, RiskSensitiveError, UnknownSubcommand
from .mc import estimate_hara, estimate_J, simulate_original, simulate_reduced
from .models import MarketParams, Measure, RunConfig, RunManifest, SimConfig
from .policy import ConstantPolicy, FeedbackPolicy, ZeroPolicy
from .riccati import solve
from .sweep import figure_specs, render_summary, sweep, to_frame
from .utils.logger import get_logger, log_as_yaml, reconfigure_loggers
from .verify import VerificationSuite

logger = get_logger(__name__)

COMMANDS = ("solve", "policy", "simulate", "sweep", "verify")
EXIT_OK, EXIT_GATED_FAILURE, EXIT_ERROR = 0, 1, 2


def _params_sha256(params: MarketParams) -> str:
    canonical = json.dumps(params.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _prepare_out_dir(out_dir: Path) -> Path:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputUnwritable(f"cannot create output directory {out_dir}: {e}") from e
    return out_dir


def _write_text(path: Path, text: str) -> str:
    try:
        path.write_text(text)
    except OSError as e:
        raise OutputUnwritable(f"cannot write {path}: {e}") from e
    return path.name


def _write_frame(path: Path, frame: pd.DataFrame) -> str:
    try:
        frame.to_csv(path, index=False, float_format="%.12g")
    except OSError as e:
        raise OutputUnwritable(f"cannot write {path}: {e}") from e
    return path.name


def _make_policy(config: RunConfig, vf=None):
    if config.policy == "zero":
        return ZeroPolicy()
    if config.policy == "constant":
        return ConstantPolicy(config.constant_u)
    return FeedbackPolicy(config.params, vf or solve(config.params, n_grid=config.grid))


def _solve(config: RunConfig, out_dir: Path, save_paths: bool) -> tuple:
    vf = solve(config.params, n_grid=config.grid)
    summary = {"q_source": vf.q_source, "coefficients": vf.coeffs.model_dump(mode="json")}
    solution = {
        "grid": vf.grid.tolist(),
        "Q": vf.q_tab.tolist(),
        "phi": vf.phi_tab.tolist(),
        **summary,
    }
    outputs = [
        _write_text(out_dir / "solution.json", json.dumps(solution, indent=2)),
        _write_frame(out_dir / "Q.csv", pd.DataFrame({"t": vf.grid, "Q": vf.q_tab})),
        _write_frame(out_dir / "phi.csv", pd.DataFrame({"t": vf.grid, "phi": vf.phi_tab})),
    ]
    print(json.dumps(summary, indent=2))
    return EXIT_OK, outputs


def _policy(config: RunConfig, out_dir: Path, save_paths: bool) -> tuple:
    policy = FeedbackPolicy(config.params, solve(config.params, n_grid=config.grid))
    records = [
        {"t": t, "a": float(policy.a(t)), "b": float(policy.b(t)), "x": x, "u": float(policy(t, x))}
        for t in config.times
        for x in config.states
    ]
    frame = pd.DataFrame.from_records(records, columns=["t", "a", "b", "x", "u"])
    frame.to_csv(sys.stdout, index=False, float_format="%.12g")
    return EXIT_OK, [_write_frame(out_dir / "policy.csv", frame)]


def _simulate(config: RunConfig, out_dir: Path, save_paths: bool) -> tuple:
    params, sim = config.params, config.sim
    policy = _make_policy(config)
    if sim.measure == Measure.P:
        estimate = estimate_J(params, policy, sim)
    else:
        estimate = estimate_hara(params, policy, sim)
    log_as_yaml(logger, estimate)
    payload = {"measure": sim.measure.value, "policy": repr(policy), **estimate.model_dump()}
    print(json.dumps(payload, indent=2))
    outputs = [_write_text(out_dir / "estimate.json", json.dumps(payload, indent=2))]

    if save_paths:
        if sim.measure == Measure.P:
            ensemble = simulate_reduced(params, policy, sim)
            frame = pd.DataFrame(
                {"x_T": ensemble.terminal_state, "integral_h": ensemble.integrals}
            )
        else:
            ensemble = simulate_original(params, policy, sim)
            frame = pd.DataFrame(
                {
                    "L_T": ensemble.terminal_state,
                    "log_wealth_T": ensemble.log_wealth,
                    "flagged": ensemble.flagged,
                }
            )
        frame.insert(0, "path", np.arange(ensemble.n_paths))
        outputs.append(_write_frame(out_dir / "paths.csv", frame))
    return EXIT_OK, outputs


def _sweep(config: RunConfig, out_dir: Path, save_paths: bool) -> tuple:
    families = config.sweeps or figure_specs(config.params)
    outputs, lines = [], []
    for name, specs in families.items():
        result = sweep(specs, name=name)
        outputs.append(_write_frame(out_dir / f"{name}.csv", to_frame(result)))
        lines.append(render_summary(result))
    outputs.append(_write_text(out_dir / "summary.md", "\n".join(lines)))
    return EXIT_OK, outputs


def _verify(config: RunConfig, out_dir: Path, save_paths: bool) -> tuple:
    suite = VerificationSuite(config.params, config.sim, n_grid=config.grid)
    reports = suite.run()
    payload = json.dumps([report.model_dump(mode="json") for report in reports], indent=2)
    print(payload)
    outputs = [
        _write_text(out_dir / "verification.json", payload),
        _write_text(out_dir / "summary.md", suite.render_summary(reports)),
    ]
    failed = [r.name for r in reports if r.gated and not r.passed]
    if failed:
        logger.error(f"gated checks failed: {', '.join(failed)}")
        return EXIT_GATED_FAILURE, outputs
    return EXIT_OK, outputs


HANDLERS = {
    "solve": _solve,
    "policy": _policy,
    "simulate": _simulate,
    "sweep": _sweep,
    "verify": _verify,
}


def write_manifest(config: RunConfig, out_dir: Path, outputs: List[str]) -> RunManifest:
    manifest = RunManifest(
        cmd=config.cmd,
        seed=config.sim.seed,
        timestamp=datetime.now(pytz.utc).isoformat(),
        versions={
            "risk-sensitive-portfolio": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
        },
        params_sha256=_params_sha256(config.params),
        outputs=outputs,
    )
    _write_text(out_dir / "manifest.json", manifest.model_dump_json(indent=2))
    log_as_yaml(logger, manifest)
    return manifest


def execute(config: RunConfig, save_paths: bool = False) -> int:
    """Run one configured command and write its manifest. Returns the exit status."""
    out_dir = _prepare_out_dir(config.out_dir)
    status, outputs = HANDLERS[config.cmd](config, out_dir, save_paths)
    write_manifest(config, out_dir, outputs)
    return status


def load_config(path: Path) -> RunConfig:
    """Raises:
    ConfigParse: unreadable file, malformed JSON or invalid fields
    UnknownSubcommand: `cmd` names no known subcommand
    """
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigParse(f"cannot read config {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigParse(f"config {path} must hold a JSON object")
    if raw.get("cmd") not in COMMANDS:
        raise UnknownSubcommand(f"unknown cmd {raw.get('cmd')!r}; expected one of {COMMANDS}")
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigParse(f"invalid config {path}: {e}") from e


def run_config(path: Path) -> int:
    return execute(load_config(path))


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=0, help="64-bit stream key")
    parser.add_argument("--paths", type=int, default=10_000, help="Monte Carlo paths")
    parser.add_argument("--steps", type=int, default=1000, help="Euler steps on [0, T]")
    parser.add_argument("--out-dir", type=Path, default=Path("out"), help="Output directory")
    parser.add_argument("--workers", type=int, default=1, help="Threads for path blocks")
    parser.add_argument("--grid", type=int, default=1000, help="Intervals of the Q/phi grid")
    market = parser.add_argument_group("market parameters")
    for name, field in MarketParams.model_fields.items():
        market.add_argument(
            f"--{name.replace('_', '-')}",
            dest=name,
            type=float,
            default=None,
            help=f"{field.description} (default {field.default})",
        )


def _add_policy_source(parser: argparse.ArgumentParser):
    parser.add_argument("--policy", choices=["feedback", "constant", "zero"], default="feedback")
    parser.add_argument("--constant-u", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsp",
        description="Risk-sensitive optimal investment with correlated noises",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    _add_common(subparsers.add_parser("solve", help="Tabulate Q and phi"))

    policy = subparsers.add_parser("policy", help="Print a(t), b(t) and u(t, x)")
    _add_common(policy)
    policy.add_argument("--times", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    policy.add_argument("--states", type=float, nargs="+", default=[0.55])

    simulate = subparsers.add_parser("simulate", help="Monte Carlo estimate of J or the HARA value")
    _add_common(simulate)
    _add_policy_source(simulate)
    simulate.add_argument("--measure", choices=[m.value for m in Measure], default="P")
    simulate.add_argument("--save-paths", action="store_true", help="Also write paths.csv")

    _add_common(subparsers.add_parser("sweep", help="Write fig1.csv ... fig4.csv"))
    _add_common(subparsers.add_parser("verify", help="Run the verification suite"))

    run = subparsers.add_parser("run", help="Execute a JSON run config")
    run.add_argument("config", type=Path)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        name: getattr(args, name)
        for name in MarketParams.model_fields
        if getattr(args, name) is not None
    }
    try:
        return RunConfig(
            cmd=args.command,
            params=MarketParams(**overrides),
            sim=SimConfig(
                n_paths=args.paths,
                n_steps=args.steps,
                seed=args.seed,
                measure=getattr(args, "measure", "P"),
                workers=args.workers,
            ),
            grid=args.grid,
            out_dir=args.out_dir,
            policy=getattr(args, "policy", "feedback"),
            constant_u=getattr(args, "constant_u", 0.0),
            times=getattr(args, "times", [0.0, 0.25, 0.5, 0.75, 1.0]),
            states=getattr(args, "states", [0.55]),
        )
    except ValidationError as e:
        raise ConfigParse(f"invalid arguments: {e}") from e


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv(find_dotenv(usecwd=True))
    reconfigure_loggers()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return run_config(args.config)
        return execute(config_from_args(args), save_paths=getattr(args, "save_paths", False))
    except RiskSensitiveError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
