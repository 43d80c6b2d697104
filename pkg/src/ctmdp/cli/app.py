from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ctmdp.cli.demo import demo_model
from ctmdp.hjb.export import value_frame, write_frame
from ctmdp.hjb.grid import TimeGrid, ValueFunction
from ctmdp.hjb.solver import normalize_scheme, solve_backward
from ctmdp.model.io import load_model, save_model
from ctmdp.model.types import ModelSpec
from ctmdp.model.validate import validate
from ctmdp.policy.builders import feedback_from_value, random_delay_policy
from ctmdp.policy.delay import DelayParams, DelayPolicy, IncompletePolicy
from ctmdp.policy.io import dump_policy, load_policy
from ctmdp.simulate.estimate import estimate_J, trajectory_frame
from ctmdp.simulate.sampler import sample_path
from ctmdp.utils.config import DEFAULT_CONFIG_NAME, deep_get, load_config, save_yaml
from ctmdp.utils.logging_setup import log_event, setup_logging
from ctmdp.utils.paths import ensure_dirs, resolve_run_paths
from ctmdp.utils.run_context import new_run_id, run_scope
from ctmdp.verify.experiments import (
    child_seed,
    comparison_suite,
    delay_no_gain,
    dpp_check,
    lipschitz_check,
    oracle_sandwich,
    tightness_check,
)
from ctmdp.verify.report import ExperimentReport, write_report

log = logging.getLogger("ctmdp.cli")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_MALFORMED = 2

Subcommand = Literal["validate", "solve", "simulate", "verify", "demo"]
EXPERIMENTS = ("dpp", "lipschitz", "delay-no-gain", "oracle", "tightness", "comparison")

_NEEDS_MODEL = {"validate", "solve", "simulate", "verify"}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    subcommand: Subcommand
    model_path: Optional[Path] = None
    policy_path: Optional[Path] = None
    dt: float = Field(gt=0.0)
    scheme: str = "euler"
    n_paths: int = 10000
    seed: int = 20240101
    out_path: Optional[Path] = None
    experiment: Optional[str] = None
    s: float = Field(default=0.0, ge=0.0)
    i: int = Field(default=1, ge=1)
    quadrature_step: Optional[float] = Field(default=None, gt=0.0)
    dump_paths: int = Field(default=0, ge=0)
    trajectories_path: Optional[Path] = None
    policy_out: Optional[Path] = None
    out_dir: Path = Path("ctmdp_out")
    log_dir: Path = Path("LOG")
    settings: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("scheme")
    @classmethod
    def _scheme(cls, v: str) -> str:
        return normalize_scheme(v)

    @field_validator("model_path", "policy_path")
    @classmethod
    def _exists(cls, v: Optional[Path]) -> Optional[Path]:
        if v is not None and not Path(v).is_file():
            raise ValueError(f"file not found: {v}")
        return v

    @field_validator("experiment")
    @classmethod
    def _experiment(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
        return v

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if self.subcommand in _NEEDS_MODEL and self.model_path is None and self.experiment != "comparison":
            raise ValueError(f"'{self.subcommand}' needs --model")
        if self.subcommand in ("simulate", "verify", "demo") and self.n_paths < 2:
            raise ValueError("n_paths must be >= 2 when simulating")
        if self.subcommand == "verify" and self.experiment is None:
            raise ValueError("'verify' needs --experiment")
        if self.dump_paths and self.trajectories_path is None:
            raise ValueError("--dump-paths needs --trajectories")
        return self

    def verify_setting(self, key: str) -> Any:
        return deep_get(self.settings, ["verify", key])


def _pick(cli_value: Any, cfg: Dict[str, Any], keys: List[str]) -> Any:
    return cli_value if cli_value is not None else deep_get(cfg, keys)


def build_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(Path(args.config) if args.config else None)
    paths = resolve_run_paths(
        args.log_dir or deep_get(cfg, ["app", "log_dir"]) or None,
        getattr(args, "out_dir", None) or deep_get(cfg, ["app", "out_dir"]) or None,
    )
    n_default = deep_get(cfg, ["demo", "n_paths"]) if args.command == "demo" else deep_get(cfg, ["simulate", "n_paths"])
    return RunConfig(
        subcommand=args.command,
        model_path=getattr(args, "model", None),
        policy_path=getattr(args, "policy", None),
        dt=_pick(getattr(args, "dt", None), cfg, ["solver", "dt"]),
        scheme=_pick(getattr(args, "scheme", None), cfg, ["solver", "scheme"]),
        n_paths=getattr(args, "n", None) or n_default,
        seed=_pick(getattr(args, "seed", None), cfg, ["simulate", "seed"]),
        out_path=getattr(args, "out", None),
        experiment=getattr(args, "experiment", None),
        s=getattr(args, "s", None) or 0.0,
        i=getattr(args, "i", None) or 1,
        quadrature_step=deep_get(cfg, ["simulate", "quadrature_step"]),
        dump_paths=getattr(args, "dump_paths", None) or 0,
        trajectories_path=getattr(args, "trajectories", None),
        policy_out=getattr(args, "dump_policy", None),
        out_dir=paths.out_dir,
        log_dir=paths.log_dir,
        settings=cfg,
    )


def _default_out(config: RunConfig, name: str) -> Path:
    return Path(config.out_path) if config.out_path else config.out_dir / name


def _solve(model: ModelSpec, config: RunConfig) -> ValueFunction:
    return solve_backward(model, TimeGrid.uniform(model.horizon, config.dt), config.scheme)


def _check_assumptions(model: ModelSpec) -> bool:
    report = validate(model)
    if not report.passed:
        for msg in report.messages:
            print(f"assumption check failed: {msg}", file=sys.stderr)
    return report.passed


def _write_estimate(est: Any, path: Path) -> Path:
    return write_frame(pd.DataFrame([est.to_dict()], columns=["mean", "stderr", "n", "seed"]), path)


def cmd_validate(config: RunConfig) -> int:
    model = load_model(config.model_path)
    report = validate(model)
    payload = report.to_dict()
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if config.out_path:
        out = Path(config.out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")
    for msg in report.messages:
        print(msg, file=sys.stderr)
    log_event(log, "cli.validate", "Model validated", passed=report.passed, M=report.M)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_solve(config: RunConfig) -> int:
    model = load_model(config.model_path)
    if not _check_assumptions(model):
        return EXIT_FAILED
    value = _solve(model, config)
    out = write_frame(value_frame(value), _default_out(config, "value.csv"))
    log_event(log, "cli.solve", "Value function written", out=str(out), scheme=value.scheme, N=value.grid.N)
    return EXIT_OK


def _policy_for(model: ModelSpec, config: RunConfig) -> DelayPolicy:
    grid = TimeGrid.uniform(model.horizon, config.dt)
    if config.policy_path is not None:
        return load_policy(config.policy_path, model, grid)
    return feedback_from_value(solve_backward(model, grid, config.scheme), model)


def cmd_simulate(config: RunConfig) -> int:
    model = load_model(config.model_path)
    if not _check_assumptions(model):
        return EXIT_FAILED
    policy = _policy_for(model, config)
    if config.policy_out is not None:
        dump_policy(policy, config.policy_out)
    step = config.quadrature_step or config.dt
    with run_scope(policy_id=policy.name):
        est = estimate_J(model, policy, config.s, config.i, config.n_paths, config.seed, quadrature_step=step)
    out = _write_estimate(est, _default_out(config, "estimate.csv"))
    if config.dump_paths:
        trajs = [
            sample_path(model, policy, config.s, config.i, config.seed, index=k, quadrature_step=step)
            for k in range(config.dump_paths)
        ]
        write_frame(trajectory_frame(trajs), config.trajectories_path)
    log_event(log, "cli.simulate", "Estimate written", out=str(out), mean=est.mean, stderr=est.stderr)
    return EXIT_OK


def _delay_params(config: RunConfig, s: float) -> DelayParams:
    return DelayParams(r0=float(config.verify_setting("delay_r0")), m=int(config.verify_setting("delay_m")), s=s)


def run_experiment(name: str, model: Optional[ModelSpec], config: RunConfig, n_paths: int) -> List[ExperimentReport]:
    """One named experiment on ``model`` (solved on the configured grid when it needs V)."""
    vs = config.verify_setting
    if name == "comparison":
        return [comparison_suite(int(vs("comparison_instances")), config.seed, config.dt, config.scheme)]
    if model is None:
        raise ValueError(f"experiment {name!r} needs --model")
    if name == "tightness":
        policies = [
            random_delay_policy(model, _delay_params(config, config.s), child_seed(config.seed, 100 + k))
            for k in range(int(vs("tightness_policies")))
        ]
        return [
            tightness_check(
                model, policies, config.s, config.i,
                vs("tightness_checkpoints"), vs("tightness_windows"), n_paths, config.seed,
            )
        ]
    value = _solve(model, config)
    if name == "lipschitz":
        return [lipschitz_check(model, value)]
    if name == "oracle":
        return [oracle_sandwich(model, value, config.s, config.i, vs("oracle_intervals"))]
    if name == "dpp":
        t1 = min(config.s + float(vs("dpp_horizon")), model.horizon)
        return [
            dpp_check(
                model, value, config.s, config.i, kind, t1, n_paths, config.seed,
                n_policies=int(vs("dpp_policies")), params=_delay_params(config, config.s),
            )
            for kind in ("deterministic", "first_jump_capped")
        ]
    if name == "delay-no-gain":
        return [
            delay_no_gain(
                model, value, _delay_params(config, config.s), int(vs("delay_policies")), n_paths, config.seed,
                s=config.s, i=config.i,
            )
        ]
    raise ValueError(f"unknown experiment {name!r}")


def _report_outcome(reports: Sequence[ExperimentReport]) -> int:
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: {r.details}", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def cmd_verify(config: RunConfig) -> int:
    model = None
    if config.model_path is not None:
        model = load_model(config.model_path)
        if not _check_assumptions(model):
            return EXIT_FAILED
    with run_scope(experiment=config.experiment):
        reports = run_experiment(str(config.experiment), model, config, config.n_paths)
    write_report(reports if len(reports) > 1 else reports[0], _default_out(config, f"{config.experiment}.json"))
    return _report_outcome(reports)


def cmd_demo(config: RunConfig) -> int:
    out_dir = config.out_dir
    ensure_dirs(out_dir)
    model = demo_model()
    save_yaml(out_dir / "demo_config.yaml", config.settings)
    save_model(model, out_dir / "demo_model.json")
    if not _check_assumptions(model):
        return EXIT_FAILED
    value = _solve(model, config)
    write_frame(value_frame(value), out_dir / "demo_value.csv")

    feedback = feedback_from_value(value, model)
    dump_policy(feedback, out_dir / "demo_policy.json")
    est = estimate_J(model, feedback, 0.0, 1, config.n_paths, config.seed, quadrature_step=value.grid.step)
    _write_estimate(est, out_dir / "demo_estimate.csv")

    delay_paths = int(deep_get(config.settings, ["demo", "delay_n_paths"]) or config.n_paths)
    small = demo_model(n_states=int(config.verify_setting("oracle_states")))
    reports: List[ExperimentReport] = []
    for name in EXPERIMENTS:
        target = small if name == "oracle" else model
        n_paths = delay_paths if name == "delay-no-gain" else config.n_paths
        with run_scope(experiment=name):
            got = run_experiment(name, target, config, n_paths)
        write_report(got if len(got) > 1 else got[0], out_dir / f"demo_{name}.json")
        reports.extend(got)
    write_report(reports, out_dir / "demo_summary.json")
    return _report_outcome(reports)


_COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "demo": cmd_demo,
}


def run(config: RunConfig) -> int:
    """Execute one subcommand; exit codes: 0 ok, 1 failed check, 2 malformed input."""
    setup_logging(config.log_dir)
    with run_scope(run_id=new_run_id(), command=config.subcommand, seed=config.seed):
        log_event(log, "cli.start", "Run started", subcommand=config.subcommand, dt=config.dt, n_paths=config.n_paths)
        try:
            code = _COMMANDS[config.subcommand](config)
        except (ValueError, IncompletePolicy, yaml.YAMLError, OSError) as exc:
            log.error("Malformed input: %s", exc)
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_MALFORMED
        except RuntimeError as exc:
            log.exception("Run failed")
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAILED
        log_event(log, "cli.finish", "Run finished", exit_code=code)
        return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ctmdp", description="Finite-horizon CTMDP toolkit")
    ap.add_argument("--config", default=DEFAULT_CONFIG_NAME)
    ap.add_argument("--log-dir", default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    def model_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model", type=Path, required=False)
        p.add_argument("--out", type=Path, default=None)

    def solver_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--scheme", choices=("euler", "explicit_euler", "rk4"), default=None)

    def mc_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--s", type=float, default=None)
        p.add_argument("--i", type=int, default=None)

    p_val = sub.add_parser("validate", help="check H1-H3 and the cost bounds")
    model_args(p_val)

    p_solve = sub.add_parser("solve", help="solve the HJB equation backward on a time grid")
    model_args(p_solve)
    solver_args(p_solve)

    p_sim = sub.add_parser("simulate", help="Monte Carlo estimate of J(s, i, policy)")
    model_args(p_sim)
    solver_args(p_sim)
    mc_args(p_sim)
    p_sim.add_argument("--policy", type=Path, default=None)
    p_sim.add_argument("--dump-paths", type=int, default=None)
    p_sim.add_argument("--trajectories", type=Path, default=None)
    p_sim.add_argument("--dump-policy", type=Path, default=None, help="write the policy in effect as a policy file")

    p_ver = sub.add_parser("verify", help="run one verification experiment")
    model_args(p_ver)
    solver_args(p_ver)
    mc_args(p_ver)
    p_ver.add_argument("--experiment", choices=EXPERIMENTS, required=True)

    p_demo = sub.add_parser("demo", help="bundled admission-control example end to end")
    solver_args(p_demo)
    p_demo.add_argument("--n", type=int, default=None)
    p_demo.add_argument("--seed", type=int, default=None)
    p_demo.add_argument("--out-dir", default=None)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = build_run_config(args)
    except (ValidationError, ValueError, yaml.YAMLError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    return run(config)
