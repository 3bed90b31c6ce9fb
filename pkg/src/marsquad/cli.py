"""Command-line entry point: run scenarios, validate configs, sweep in parallel.

Verbs:
    run       execute one scenario, write log.csv / metrics.json / config.ini
    validate  check a config and print derived quantities without running
    sweep     run several scenario files in parallel worker processes

Output layout: <outdir>/<scenario>/<controller>/{log.csv, metrics.json,
config.ini}. The CSV schema is fixed (see ``simulator.CSV_COLUMNS``): a
header row, then one row per control step with floats printed at 17
significant digits, so identical config and seed reproduce files byte for
byte.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, ScenarioConfig, config_snapshot, derived_report, load_config
from .linmodel import discretize, linearize_hover
from .mpc import MpcController, QpMaxIterations
from .pid import PidController
from .simulator import NumericalDivergence, compute_metrics, run_closed_loop, write_csv, write_metrics

_METRIC_ROWS = (
    ("rms position error [m]", "rms_position_error"),
    ("max overshoot x [m]", "max_overshoot_x_m"),
    ("max overshoot y [m]", "max_overshoot_y_m"),
    ("max overshoot z [m]", "max_overshoot_z_m"),
    ("settling time [s]", "settling_time"),
    ("steady state error [m]", "steady_state_error"),
    ("control effort", "control_effort"),
    ("constraint violations", "constraint_violations"),
)


def _make_controller(kind: str, cfg: ScenarioConfig):
    if kind == "mpc":
        model = discretize(linearize_hover(cfg.veh, cfg.env), cfg.sim.control_dt)
        return MpcController(model, cfg.mpc, cfg.veh, cfg.env)
    if kind == "pid":
        return PidController(cfg.pid, cfg.veh, cfg.env, cfg.sim.control_dt)
    raise ValueError(f"unknown controller {kind!r}")


def run_scenario(cfg: ScenarioConfig, kind: str, outdir: Path):
    """Run one controller on one scenario and write its artifacts."""
    controller = _make_controller(kind, cfg)
    log = run_closed_loop(
        controller, cfg.trajectory(), cfg.disturbance,
        duration=cfg.sim.duration, control_dt=cfg.sim.control_dt,
        substeps=cfg.sim.substeps, veh=cfg.veh, env=cfg.env, seed=cfg.sim.seed,
    )
    metrics = compute_metrics(log, transient_skip=cfg.sim.transient_skip)
    dest = outdir / cfg.name / kind
    dest.mkdir(parents=True, exist_ok=True)
    write_csv(log, dest / "log.csv")
    write_metrics(metrics, dest / "metrics.json")
    (dest / "config.ini").write_text(config_snapshot(cfg))
    return metrics


def _print_metrics(name: str, metrics):
    d = metrics.as_dict()
    print(f"  [{name}]")
    for label, key in _METRIC_ROWS:
        print(f"    {label:<26} {d[key]:.6g}")


def _print_comparison(mpc_metrics, pid_metrics):
    d_mpc, d_pid = mpc_metrics.as_dict(), pid_metrics.as_dict()
    print(f"  {'metric':<26} {'mpc':>14} {'pid':>14}")
    for label, key in _METRIC_ROWS:
        print(f"  {label:<26} {d_mpc[key]:>14.6g} {d_pid[key]:>14.6g}")


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, args.set or [])
    except ConfigError as err:
        print(err, file=sys.stderr)
        return 2
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, sim=replace(cfg.sim, seed=args.seed))
    controller = args.controller or cfg.sim.controller
    outdir = Path(args.out) if args.out else Path(cfg.sim.outdir)

    kinds = ["mpc", "pid"] if controller == "both" else [controller]
    results = {}
    for kind in kinds:
        try:
            results[kind] = run_scenario(cfg, kind, outdir)
        except NumericalDivergence as err:
            print(f"error: {kind} run diverged: {err}", file=sys.stderr)
            return 3
        except QpMaxIterations as err:
            print(f"error: QP failure during {kind} run: {err}", file=sys.stderr)
            return 4

    print(f"scenario {cfg.name} ({cfg.description or 'no description'})")
    if controller == "both":
        _print_comparison(results["mpc"], results["pid"])
    else:
        _print_metrics(controller, results[controller])
    print(f"outputs under {outdir / cfg.name}")
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config, args.set or [])
    except ConfigError as err:
        print("configuration invalid:", file=sys.stderr)
        for p in err.problems:
            print(f"  - {p}", file=sys.stderr)
        return 2
    print(f"configuration valid: {args.config}")
    for key, value in derived_report(cfg).items():
        print(f"  {key:<22} {value:.6g}")
    return 0


def _sweep_worker(task):
    config_path, overrides, out = task
    cfg = load_config(config_path, overrides)
    outdir = Path(out) if out else Path(cfg.sim.outdir)
    kinds = ["mpc", "pid"] if cfg.sim.controller == "both" else [cfg.sim.controller]
    summary = {}
    for kind in kinds:
        metrics = run_scenario(cfg, kind, outdir)
        summary[kind] = metrics.as_dict()
    return cfg.name, summary


def _cmd_sweep(args) -> int:
    tasks = [(path, args.set or [], args.out) for path in args.configs]
    # validate everything up front so a typo does not burn a sweep
    for path in args.configs:
        try:
            load_config(path, args.set or [])
        except ConfigError as err:
            print(f"{path}: {err}", file=sys.stderr)
            return 2
    failures = 0
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        for task, result in zip(tasks, pool.map(_sweep_worker_safe, tasks)):
            name, payload = result
            if name is None:
                print(f"error: {task[0]}: {payload}", file=sys.stderr)
                failures += 1
            else:
                rms = {k: v["rms_position_error"] for k, v in payload.items()}
                print(f"{name}: " + ", ".join(f"{k} rms={v:.4g} m" for k, v in rms.items()))
    return 1 if failures else 0


def _sweep_worker_safe(task):
    try:
        return _sweep_worker(task)
    except Exception as err:  # worker errors must not kill the pool
        return None, f"{type(err).__name__}: {err}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="marsquad",
        description="Closed-loop simulation of a Mars coaxial octorotor "
                    "under predictive or PID control.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--config", required=True, help="scenario file")
    p_run.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config value")
    p_run.add_argument("--out", help="output directory (default from [sim] outdir)")
    p_run.add_argument("--seed", type=int, help="override the run seed")
    p_run.add_argument("--controller", choices=["mpc", "pid", "both"],
                       help="override the configured controller")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p_val.set_defaults(func=_cmd_validate)

    p_sweep = sub.add_parser("sweep", help="run several scenarios in parallel")
    p_sweep.add_argument("configs", nargs="+", help="scenario files")
    p_sweep.add_argument("--jobs", type=int, default=None, help="worker processes")
    p_sweep.add_argument("--out", help="output directory override")
    p_sweep.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    p_sweep.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
