#!/usr/bin/env python3
"""Head-to-head corner behaviour: predictive controller vs the PID cascade.

Runs the square-circuit scenario with both controllers on the same plant
and seed, prints the metric table, and reports the worst excursion past
the square's boundary (the corner overshoot).

    python scripts/square_comparison.py [--out DIR]
"""

import argparse
import sys

import numpy as np

from marsquad.cli import run_scenario
from marsquad.config import load_config
from marsquad.scenarios import scenario_path
from marsquad.simulator import run_closed_loop, compute_metrics
from marsquad.linmodel import discretize, linearize_hover
from marsquad.mpc import MpcController
from marsquad.pid import PidController


def corner_overshoot(log, side):
    x, y = log.states[:, 0], log.states[:, 1]
    excursion = np.maximum.reduce([
        np.maximum(0.0, -x), np.maximum(0.0, x - side),
        np.maximum(0.0, -y), np.maximum(0.0, y - side)])
    return float(excursion.max())


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="also write CSV logs here")
    args = parser.parse_args()

    cfg = load_config(scenario_path("square_corners"))
    side = cfg.traj_params["side"]

    results = {}
    for kind in ("mpc", "pid"):
        if kind == "mpc":
            model = discretize(linearize_hover(cfg.veh, cfg.env), cfg.sim.control_dt)
            controller = MpcController(model, cfg.mpc, cfg.veh, cfg.env)
        else:
            controller = PidController(cfg.pid, cfg.veh, cfg.env, cfg.sim.control_dt)
        log = run_closed_loop(controller, cfg.trajectory(), cfg.disturbance,
                              duration=cfg.sim.duration, control_dt=cfg.sim.control_dt,
                              substeps=cfg.sim.substeps, veh=cfg.veh, env=cfg.env,
                              seed=cfg.sim.seed)
        results[kind] = (log, compute_metrics(log))

    print(f"{'metric':<28} {'mpc':>12} {'pid':>12}")
    rows = [
        ("corner overshoot [cm]",
         100 * corner_overshoot(results["mpc"][0], side),
         100 * corner_overshoot(results["pid"][0], side)),
        ("rms position error [m]",
         results["mpc"][1].rms_position_error, results["pid"][1].rms_position_error),
        ("control effort",
         results["mpc"][1].control_effort, results["pid"][1].control_effort),
    ]
    for label, m, p in rows:
        print(f"{label:<28} {m:>12.4g} {p:>12.4g}")

    if args.out:
        from pathlib import Path
        for kind in ("mpc", "pid"):
            run_scenario(cfg, kind, Path(args.out))
        print(f"logs written under {args.out}/square_corners/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
