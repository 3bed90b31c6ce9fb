"""Cascaded PID position-and-heading controller over the nonlinear plant.

Structure: an outer position loop converts heading-rotated position errors
into roll/pitch angle targets; inner loops regulate attitude and altitude
into a wrench that the rotor mixer turns into squared-speed commands. One
gain set serves the whole flight envelope. Derivative action uses measured
rates rather than error derivatives, so setpoint steps do not kick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import dynamics
from .params import EnvParams, VehicleParams
from .trajectories import RefGenerator, RefSample

__all__ = ["AxisGains", "PidGains", "PidMemory", "pid_step", "PidController"]


class AxisGains(NamedTuple):
    kp: float
    ki: float
    kd: float


@dataclass(frozen=True)
class PidGains:
    """Per-axis gains plus the anti-windup and tilt safety clamps."""

    x: AxisGains
    y: AxisGains
    z: AxisGains
    roll: AxisGains
    pitch: AxisGains
    yaw: AxisGains
    integrator_limit: float = 1.0   # clamp on each integrated error
    max_tilt: float = 0.35          # rad, ceiling on commanded roll/pitch

    def __post_init__(self):
        for name in ("x", "y", "z", "roll", "pitch", "yaw"):
            gains = getattr(self, name)
            if any(g < 0 or not math.isfinite(g) for g in gains):
                raise ValueError(f"gains for axis {name} must be finite and >= 0")
        if self.integrator_limit <= 0:
            raise ValueError("integrator_limit must be > 0")
        if not 0.0 < self.max_tilt <= math.pi / 4:
            raise ValueError("max_tilt must lie in (0, pi/4]")

    @classmethod
    def default(cls) -> "PidGains":
        # hand-tuned on the simultaneous step scenario: stable and settling,
        # with the corner overshoot a single gain set cannot avoid
        return cls(
            x=AxisGains(0.30, 0.01, 0.35),
            y=AxisGains(0.30, 0.01, 0.35),
            z=AxisGains(2.2, 0.3, 3.2),
            roll=AxisGains(40.0, 0.5, 12.0),
            pitch=AxisGains(40.0, 0.5, 12.0),
            yaw=AxisGains(20.0, 0.2, 10.0),
            integrator_limit=1.0,
            max_tilt=0.35,
        )


@dataclass
class PidMemory:
    """Integrator state (x, y, z, roll, pitch, yaw order) plus debug taps."""

    integrals: np.ndarray = field(default_factory=lambda: np.zeros(6))
    last_tilt_target: tuple = (0.0, 0.0)  # (phi_des, theta_des)


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def pid_step(x_now: np.ndarray, ref: RefSample, gains: PidGains, dt: float,
             mem: PidMemory, veh: VehicleParams, env: EnvParams) -> np.ndarray:
    """One cascade update; returns the squared-speed command.

    Saturated allocations fall back to the clamped command and freeze the
    integrators for the step (conditional anti-windup).
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    s = np.asarray(x_now, dtype=float)

    ex = ref.x - s[0]
    ey = ref.y - s[1]
    ez = ref.z - s[2]
    psi = s[8]
    cps, sps = math.cos(psi), math.sin(psi)
    # rotate position errors and velocities into the heading frame
    e_bx = cps * ex + sps * ey
    e_by = -sps * ex + cps * ey
    v_bx = cps * s[3] + sps * s[4]
    v_by = -sps * s[3] + cps * s[4]
    e_psi = dynamics.wrap_angle(ref.psi - psi)

    lim = gains.integrator_limit
    new_int = mem.integrals.copy()
    new_int[0] = _clamp(new_int[0] + e_bx * dt, -lim, lim)
    new_int[1] = _clamp(new_int[1] + e_by * dt, -lim, lim)
    new_int[2] = _clamp(new_int[2] + ez * dt, -lim, lim)

    theta_des = _clamp(
        gains.x.kp * e_bx + gains.x.ki * new_int[0] - gains.x.kd * v_bx,
        -gains.max_tilt, gains.max_tilt)
    phi_des = _clamp(
        -(gains.y.kp * e_by + gains.y.ki * new_int[1] - gains.y.kd * v_by),
        -gains.max_tilt, gains.max_tilt)

    e_phi = phi_des - s[6]
    e_theta = theta_des - s[7]
    new_int[3] = _clamp(new_int[3] + e_phi * dt, -lim, lim)
    new_int[4] = _clamp(new_int[4] + e_theta * dt, -lim, lim)
    new_int[5] = _clamp(new_int[5] + e_psi * dt, -lim, lim)

    climb_acc = gains.z.kp * ez + gains.z.ki * new_int[2] - gains.z.kd * s[5]
    thrust = max(veh.mass * (env.gravity + climb_acc), 0.0)
    roll_m = gains.roll.kp * e_phi + gains.roll.ki * new_int[3] - gains.roll.kd * s[9]
    pitch_m = gains.pitch.kp * e_theta + gains.pitch.ki * new_int[4] - gains.pitch.kd * s[10]
    yaw_m = gains.yaw.kp * e_psi + gains.yaw.ki * new_int[5] - gains.yaw.kd * s[11]

    try:
        cmd = dynamics.allocate(np.array([thrust, roll_m, pitch_m, yaw_m]), veh)
        mem.integrals = new_int
    except dynamics.AllocationSaturated as sat:
        cmd = sat.command  # keep old integrals: windup protection
    mem.last_tilt_target = (phi_des, theta_des)
    return cmd


class PidController:
    """Stateful wrapper giving the cascade the same surface as the MPC."""

    def __init__(self, gains: PidGains, veh: VehicleParams, env: EnvParams, dt: float):
        if dt <= 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        self.gains = gains
        self.veh = veh
        self.env = env
        self.dt = dt
        self.memory = PidMemory()
        self.last_qp_iters = 0  # parity with the MPC logging surface

    def reset(self):
        self.memory = PidMemory()

    def command(self, t: float, x_now: np.ndarray, traj: RefGenerator) -> np.ndarray:
        return pid_step(x_now, traj(t), self.gains, self.dt, self.memory,
                        self.veh, self.env)
