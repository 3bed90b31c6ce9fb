"""Near-hover linear state-space model and exact zero-order-hold discretization.

The continuous model comes from small-angle simplification of the nonlinear
equations about the hover equilibrium: positions integrate velocities,
horizontal accelerations couple to pitch/roll through gravity, vertical and
angular accelerations are linear in the squared rotor speeds. The resulting
A is nilpotent (A^4 = 0), so the zero-order-hold matrix exponential is an
exact four-term polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import dynamics
from .params import N_ROTORS, EnvParams, VehicleParams

__all__ = ["LinearModel", "linearize_hover", "discretize", "numeric_jacobian"]

N_STATES = 12
N_OUTPUTS = 4


@dataclass(frozen=True)
class LinearModel:
    """State-space model (x' = Ax + Bu, y = Cx) about a reference pair.

    ``dt == 0`` marks a continuous model; after discretization ``dt`` is the
    sampling time and A, B hold the discrete transition/input maps. The
    output y = (x, y, z, psi) is the controlled position-and-heading vector.
    """

    A: np.ndarray   # 12x12
    B: np.ndarray   # 12x8
    C: np.ndarray   # 4x12
    D: np.ndarray   # 4x8, always zero
    x_ref: np.ndarray  # 12, linearization state
    u_ref: np.ndarray  # 8, linearization input (squared speeds)
    dt: float          # s, 0 for continuous

    def __post_init__(self):
        if self.A.shape != (N_STATES, N_STATES) or self.B.shape != (N_STATES, N_ROTORS):
            raise ValueError("A must be 12x12 and B 12x8")
        if self.C.shape != (N_OUTPUTS, N_STATES) or self.D.shape != (N_OUTPUTS, N_ROTORS):
            raise ValueError("C must be 4x12 and D 4x8")
        if np.any(self.D != 0.0):
            raise ValueError("D must be identically zero")
        if self.dt < 0:
            raise ValueError(f"dt must be >= 0, got {self.dt}")
        if self.dt == 0.0:
            a4 = np.linalg.matrix_power(self.A, 4)
            if np.any(a4 != 0.0):
                raise ValueError("continuous A must satisfy A^4 = 0")

    @property
    def continuous(self) -> bool:
        return self.dt == 0.0


def _output_matrix() -> np.ndarray:
    c = np.zeros((N_OUTPUTS, N_STATES))
    c[0, 0] = 1.0  # x
    c[1, 1] = 1.0  # y
    c[2, 2] = 1.0  # z
    c[3, 8] = 1.0  # psi
    return c


def linearize_hover(veh: VehicleParams, env: EnvParams) -> LinearModel:
    """Analytic continuous (A, B, C, D) about the hover equilibrium."""
    g = env.gravity
    a = np.zeros((N_STATES, N_STATES))
    a[0, 3] = 1.0
    a[1, 4] = 1.0
    a[2, 5] = 1.0
    a[3, 7] = g      # x acceleration from pitch
    a[4, 6] = -g     # y acceleration from roll
    a[6, 9] = 1.0
    a[7, 10] = 1.0
    a[8, 11] = 1.0

    kt_m = veh.thrust_coeff / veh.mass
    dkt = veh.arm_length * veh.thrust_coeff
    b = np.zeros((N_STATES, N_ROTORS))
    b[5, :] = kt_m
    b[9, :] = (dkt / veh.inertia_xx) * np.array([0, 0, -1, -1, 0, 0, 1, 1], dtype=float)
    b[10, :] = (dkt / veh.inertia_yy) * np.array([-1, -1, 0, 0, 1, 1, 0, 0], dtype=float)
    b[11, :] = (veh.torque_coeff / veh.inertia_zz) * np.array(
        [-1, 1, -1, 1, -1, 1, -1, 1], dtype=float)

    return LinearModel(
        A=a,
        B=b,
        C=_output_matrix(),
        D=np.zeros((N_OUTPUTS, N_ROTORS)),
        x_ref=np.zeros(N_STATES),
        u_ref=dynamics.hover_command(veh, env),
        dt=0.0,
    )


def discretize(model: LinearModel, ts: float) -> LinearModel:
    """Exact zero-order-hold discretization at sampling time ``ts``.

    Because A^4 = 0 the exponential series terminates:
        Ad = I + A ts + (A ts)^2/2 + (A ts)^3/6
        Bd = (I ts + A ts^2/2 + A^2 ts^3/6 + A^3 ts^4/24) B
    """
    if ts <= 0:
        raise ValueError(f"sampling time must be > 0, got {ts}")
    if not model.continuous:
        raise ValueError("model is already discrete")
    a = model.A
    eye = np.eye(N_STATES)
    a2 = a @ a
    a3 = a2 @ a
    ad = eye + a * ts + a2 * (ts**2 / 2.0) + a3 * (ts**3 / 6.0)
    integral = eye * ts + a * (ts**2 / 2.0) + a2 * (ts**3 / 6.0) + a3 * (ts**4 / 24.0)
    bd = integral @ model.B
    return replace(model, A=ad, B=bd, dt=ts)


def numeric_jacobian(x0: np.ndarray, u0: np.ndarray, veh: VehicleParams,
                     env: EnvParams, eps: float = 1e-6):
    """Central-difference Jacobians of the nonlinear model at (x0, u0).

    Returns (dF/dx, dF/du) as a (12x12, 12x8) pair. Serves as an
    independent check of the analytic linearization.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    x0 = np.asarray(x0, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    a = np.zeros((N_STATES, N_STATES))
    for j in range(N_STATES):
        dx = np.zeros(N_STATES)
        dx[j] = eps
        f_plus = dynamics.state_derivative(x0 + dx, u0, veh, env)
        f_minus = dynamics.state_derivative(x0 - dx, u0, veh, env)
        a[:, j] = (f_plus - f_minus) / (2.0 * eps)
    b = np.zeros((N_STATES, N_ROTORS))
    for j in range(N_ROTORS):
        du = np.zeros(N_ROTORS)
        du[j] = eps
        f_plus = dynamics.state_derivative(x0, u0 + du, veh, env)
        f_minus = dynamics.state_derivative(x0, u0 - du, veh, env)
        b[:, j] = (f_plus - f_minus) / (2.0 * eps)
    return a, b
