"""Fixed-step closed-loop simulation, disturbance injection, logging, metrics.

The plant integrates with classical RK4 at ``control_dt / substeps`` while
the controller output is held between samples. Runs are deterministic: a
given configuration and seed always produce the same log, and the CSV
writer prints floats at 17 significant digits so logs compare byte for
byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .params import EnvParams, VehicleParams
from .trajectories import RefGenerator

__all__ = [
    "Pulse",
    "Disturbance",
    "SimLog",
    "Metrics",
    "NumericalDivergence",
    "rk4_step",
    "run_closed_loop",
    "compute_metrics",
    "write_csv",
    "write_metrics",
    "CSV_COLUMNS",
]

_STATE_LIMIT = 1e6
_PITCH_LIMIT = math.pi / 2 - 0.01

CSV_COLUMNS = (
    "t",
    "x", "y", "z", "vx", "vy", "vz",
    "phi", "theta", "psi", "phi_dot", "theta_dot", "psi_dot",
    "ref_x", "ref_y", "ref_z", "ref_psi",
    "omega_sq_1", "omega_sq_2", "omega_sq_3", "omega_sq_4",
    "omega_sq_5", "omega_sq_6", "omega_sq_7", "omega_sq_8",
    "thrust", "roll_moment", "pitch_moment", "yaw_moment", "net_rotor_speed",
    "qp_iters",
)


@dataclass(frozen=True)
class Pulse:
    """A rectangular disturbance pulse: ground-frame force, body-frame torque."""

    t_start: float
    t_end: float
    force: tuple = (0.0, 0.0, 0.0)   # N
    torque: tuple = (0.0, 0.0, 0.0)  # N m

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError(f"pulse needs t_start < t_end, got [{self.t_start}, {self.t_end}]")
        if len(self.force) != 3 or len(self.torque) != 3:
            raise ValueError("force and torque must be 3-vectors")
        if not all(math.isfinite(v) for v in (*self.force, *self.torque)):
            raise ValueError("pulse magnitudes must be finite")


@dataclass(frozen=True)
class Disturbance:
    """Scheduled pulses plus optional seeded white noise per channel group."""

    pulses: tuple = ()
    noise_force: float = 0.0   # N std per axis, ground frame
    noise_torque: float = 0.0  # N m std per axis, body frame

    def __post_init__(self):
        if self.noise_force < 0 or self.noise_torque < 0:
            raise ValueError("noise amplitudes must be >= 0")

    @property
    def has_noise(self) -> bool:
        return self.noise_force > 0 or self.noise_torque > 0

    def sample(self, t: float, rng: np.random.Generator | None):
        """Force/torque realization at time t, held over the next substep."""
        force = np.zeros(3)
        torque = np.zeros(3)
        for p in self.pulses:
            if p.t_start <= t < p.t_end:
                force += p.force
                torque += p.torque
        if self.has_noise:
            if rng is None:
                raise ValueError("noisy disturbance needs an rng")
            if self.noise_force > 0:
                force += rng.normal(0.0, self.noise_force, 3)
            if self.noise_torque > 0:
                torque += rng.normal(0.0, self.noise_torque, 3)
        return force, torque


@dataclass
class SimLog:
    """Per-control-step record of one closed-loop run."""

    t: np.ndarray         # (n,)
    states: np.ndarray    # (n, 12)
    commands: np.ndarray  # (n, 8)
    refs: np.ndarray      # (n, 4)
    wrenches: np.ndarray  # (n, 5)
    qp_iters: np.ndarray  # (n,)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class Metrics:
    """Tracking quality summary of a run."""

    rms_position_error: float          # m, 3D, after the transient window
    max_overshoot_m: tuple             # per axis (x, y, z), m
    max_overshoot_pct: tuple           # per axis, percent of step size
    settling_time: float               # s, 2 percent band; inf if never settles
    steady_state_error: float          # m, worst axis over the last 10 percent
    control_effort: float              # sum |u - u_hover|^2 * dt
    constraint_violations: int         # commands outside the box; 0 expected

    def as_dict(self) -> dict:
        return {
            "rms_position_error": self.rms_position_error,
            "max_overshoot_x_m": self.max_overshoot_m[0],
            "max_overshoot_y_m": self.max_overshoot_m[1],
            "max_overshoot_z_m": self.max_overshoot_m[2],
            "max_overshoot_x_pct": self.max_overshoot_pct[0],
            "max_overshoot_y_pct": self.max_overshoot_pct[1],
            "max_overshoot_z_pct": self.max_overshoot_pct[2],
            "settling_time": self.settling_time,
            "steady_state_error": self.steady_state_error,
            "control_effort": self.control_effort,
            "constraint_violations": self.constraint_violations,
        }


class NumericalDivergence(RuntimeError):
    """Integration left the valid envelope; carries the partial log."""

    def __init__(self, message: str, log: SimLog | None = None):
        super().__init__(message)
        self.log = log


def _check_envelope(state: np.ndarray, t: float):
    if np.any(np.abs(state) > _STATE_LIMIT) or not np.all(np.isfinite(state)):
        raise NumericalDivergence(f"state magnitude exceeded {_STATE_LIMIT:g} at t={t:.3f}")
    if abs(state[7]) >= _PITCH_LIMIT:
        raise NumericalDivergence(f"pitch approached gimbal lock at t={t:.3f}")


def rk4_step(state: np.ndarray, omega_sq: np.ndarray, dt: float,
             veh: VehicleParams, env: EnvParams,
             dist: Disturbance | None = None, t: float = 0.0,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """Classical RK4 step with the command and disturbance held constant.

    The disturbance is sampled once at the step start, matching the
    piecewise-constant actuation model. Angles are re-wrapped afterwards
    and the envelope check raises ``NumericalDivergence`` on blow-up.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    s = np.asarray(state, dtype=float)
    wrench = dynamics.wrench_from_rotors(omega_sq, veh)
    if dist is not None:
        force, torque = dist.sample(t, rng)
    else:
        force, torque = None, None

    def f(x):
        return dynamics._derivative(x, wrench, veh, env, force, torque)

    k1 = f(s)
    k2 = f(s + 0.5 * dt * k1)
    k3 = f(s + 0.5 * dt * k2)
    k4 = f(s + dt * k3)
    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = dynamics.wrap_state_angles(out)
    _check_envelope(out, t + dt)
    return out


def run_closed_loop(controller, traj: RefGenerator, dist: Disturbance | None,
                    duration: float, control_dt: float, substeps: int,
                    veh: VehicleParams, env: EnvParams,
                    seed: int = 0, x0: np.ndarray | None = None,
                    plant: str = "nonlinear", model=None) -> SimLog:
    """Run controller against plant on a fixed grid and log every step.

    ``plant="linear"`` steps the supplied discrete model instead of the
    nonlinear equations (no substeps, no disturbances); it exists to check
    the controller's internal predictions against an exact plant.
    """
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if control_dt <= 0:
        raise ValueError(f"control_dt must be > 0, got {control_dt}")
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    if plant not in ("nonlinear", "linear"):
        raise ValueError(f"unknown plant kind {plant!r}")
    if plant == "linear" and model is None:
        raise ValueError("linear plant needs a discrete model")

    n_steps = math.ceil(duration / control_dt)
    rng = np.random.default_rng(seed)
    state = np.zeros(12) if x0 is None else np.asarray(x0, dtype=float).copy()

    t_log = np.empty(n_steps)
    states = np.empty((n_steps, 12))
    commands = np.empty((n_steps, 8))
    refs = np.empty((n_steps, 4))
    wrenches = np.empty((n_steps, 5))
    qp_iters = np.zeros(n_steps, dtype=int)

    def partial(k):
        return SimLog(t_log[:k].copy(), states[:k].copy(), commands[:k].copy(),
                      refs[:k].copy(), wrenches[:k].copy(), qp_iters[:k].copy(),
                      meta=dict(meta))

    meta = {
        "seed": seed,
        "u_hover": dynamics.hover_command(veh, env),
        "u_min": np.zeros(8),
        "u_max": np.full(8, veh.max_rotor_speed ** 2),
        "control_dt": control_dt,
        "plant": plant,
    }

    sub_dt = control_dt / substeps
    for k in range(n_steps):
        t = k * control_dt
        cmd = controller.command(t, state, traj)
        ref = traj(t)
        t_log[k] = t
        states[k] = state
        commands[k] = cmd
        refs[k] = ref.as_array()
        wrenches[k] = dynamics.wrench_from_rotors(cmd, veh)
        qp_iters[k] = getattr(controller, "last_qp_iters", 0)

        try:
            if plant == "nonlinear":
                for i in range(substeps):
                    state = rk4_step(state, cmd, sub_dt, veh, env, dist,
                                     t + i * sub_dt, rng)
            else:
                dx = state - model.x_ref
                du = cmd - model.u_ref
                state = model.x_ref + model.A @ dx + model.B @ du
        except NumericalDivergence as err:
            raise NumericalDivergence(str(err), log=partial(k + 1)) from None

    return partial(n_steps)


def _axis_overshoot(trace: np.ndarray, start: float, final_ref: float):
    """Overshoot past the final reference along the approach direction."""
    step = final_ref - start
    if abs(step) < 1e-9:
        dev = float(np.max(np.abs(trace - final_ref)))
        return dev, 0.0
    direction = math.copysign(1.0, step)
    over = float(np.max((trace - final_ref) * direction))
    over = max(over, 0.0)
    return over, 100.0 * over / abs(step)


def compute_metrics(log: SimLog, transient_skip: float = 0.0) -> Metrics:
    """Quantify tracking quality; see ``Metrics`` for the field definitions.

    Overshoot and settling are measured per axis against the final
    reference value, which reads naturally for step segments. The RMS
    excludes the first ``transient_skip`` seconds.
    """
    if len(log) == 0:
        raise ValueError("cannot compute metrics of an empty log")
    t = log.t
    pos = log.states[:, 0:3]
    ref = log.refs[:, 0:3]

    keep = t >= t[0] + transient_skip
    if not np.any(keep):
        keep = np.ones_like(t, dtype=bool)
    err = pos[keep] - ref[keep]
    rms = float(np.sqrt(np.mean(np.sum(err * err, axis=1))))

    final_ref = ref[-1]
    start = pos[0]
    overshoot_m = []
    overshoot_pct = []
    for a in range(3):
        m, pct = _axis_overshoot(pos[:, a], start[a], final_ref[a])
        overshoot_m.append(m)
        overshoot_pct.append(pct)

    # settling: 2 percent of the step size on every axis that actually steps
    settling = 0.0
    for a in range(3):
        step = final_ref[a] - start[a]
        if abs(step) < 1e-6:
            continue
        band = 0.02 * abs(step)
        outside = np.abs(pos[:, a] - final_ref[a]) > band
        if outside[-1]:
            settling = math.inf
            break
        last_out = np.nonzero(outside)[0]
        if len(last_out):
            settling = max(settling, t[min(last_out[-1] + 1, len(t) - 1)] - t[0])

    tail = max(1, int(0.1 * len(t)))
    sse = float(np.max(np.abs(pos[-tail:] - ref[-tail:])))

    u_hover = log.meta.get("u_hover")
    dt = log.meta.get("control_dt", float(t[1] - t[0]) if len(t) > 1 else 0.0)
    if u_hover is None:
        effort = float("nan")
    else:
        du = log.commands - np.asarray(u_hover)[None, :]
        effort = float(np.sum(du * du) * dt)

    u_min = log.meta.get("u_min")
    u_max = log.meta.get("u_max")
    if u_min is None or u_max is None:
        violations = 0
    else:
        bad = (log.commands < np.asarray(u_min)[None, :]) | \
              (log.commands > np.asarray(u_max)[None, :])
        violations = int(np.sum(np.any(bad, axis=1)))

    return Metrics(
        rms_position_error=rms,
        max_overshoot_m=tuple(overshoot_m),
        max_overshoot_pct=tuple(overshoot_pct),
        settling_time=settling,
        steady_state_error=sse,
        control_effort=effort,
        constraint_violations=violations,
    )


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(log: SimLog, path) -> None:
    """Write the run log with a fixed header, one row per control step."""
    rows = [",".join(CSV_COLUMNS)]
    for k in range(len(log)):
        vals = [log.t[k], *log.states[k], *log.refs[k], *log.commands[k],
                *log.wrenches[k]]
        rows.append(",".join(_fmt(v) for v in vals) + f",{int(log.qp_iters[k])}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(rows) + "\n")


def write_metrics(metrics: Metrics, path) -> None:
    """Write metrics as a flat, sorted JSON document."""
    with open(path, "w") as fh:
        json.dump(metrics.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
