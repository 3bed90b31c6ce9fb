"""Condensed linear model predictive controller with a box-constrained QP.

Each control step stacks the predicted state deviations over the horizon,
condenses the quadratic tracking cost onto the input sequence, solves the
resulting box-constrained QP with a projected-Newton method, and applies
the first input block. The decision variable is the deviation of the eight
squared rotor speeds from the hover command, so the model stays affine in
the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dynamics import wrap_angle
from .linmodel import N_OUTPUTS, N_STATES, LinearModel
from .params import N_ROTORS, EnvParams, VehicleParams
from .trajectories import ref_window

__all__ = [
    "MpcConfig",
    "Prediction",
    "ControllerState",
    "QpMaxIterations",
    "build_prediction",
    "build_cost",
    "solve_qp",
    "mpc_step",
    "MpcController",
]


class QpMaxIterations(RuntimeError):
    """QP iteration cap hit; carries the best iterate and its residual."""

    def __init__(self, solution: np.ndarray, residual: float):
        super().__init__(f"QP did not converge (residual {residual:.3e})")
        self.solution = solution
        self.residual = residual


@dataclass(frozen=True)
class MpcConfig:
    """Horizon, weights, and input box for the predictive controller.

    ``state_weight`` / ``input_weight`` / ``input_rate_weight`` are the
    diagonals of the per-step weighting matrices. Input bounds are absolute
    squared rotor speeds; ``constrained=False`` solves the unconstrained QP
    and only clips the applied command.
    """

    horizon: int
    state_weight: np.ndarray       # (12,), >= 0
    input_weight: np.ndarray       # (8,), > 0
    input_rate_weight: np.ndarray  # (8,), >= 0
    u_min: np.ndarray              # (8,), rad^2/s^2
    u_max: np.ndarray              # (8,), rad^2/s^2
    qp_max_iter: int = 100
    qp_tol: float = 1e-9
    constrained: bool = True

    def __post_init__(self):
        object.__setattr__(self, "state_weight", np.asarray(self.state_weight, dtype=float))
        object.__setattr__(self, "input_weight", np.asarray(self.input_weight, dtype=float))
        object.__setattr__(self, "input_rate_weight",
                           np.asarray(self.input_rate_weight, dtype=float))
        object.__setattr__(self, "u_min", np.asarray(self.u_min, dtype=float))
        object.__setattr__(self, "u_max", np.asarray(self.u_max, dtype=float))
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.state_weight.shape != (N_STATES,) or np.any(self.state_weight < 0):
            raise ValueError("state_weight must be a nonnegative 12-vector")
        if self.input_weight.shape != (N_ROTORS,) or np.any(self.input_weight <= 0):
            raise ValueError("input_weight must be a strictly positive 8-vector")
        if self.input_rate_weight.shape != (N_ROTORS,) or np.any(self.input_rate_weight < 0):
            raise ValueError("input_rate_weight must be a nonnegative 8-vector")
        if self.u_min.shape != (N_ROTORS,) or self.u_max.shape != (N_ROTORS,):
            raise ValueError("u_min and u_max must be 8-vectors")
        if np.any(self.u_min >= self.u_max):
            raise ValueError("u_min must be elementwise below u_max")
        if self.qp_max_iter < 1:
            raise ValueError("qp_max_iter must be >= 1")
        if self.qp_tol <= 0:
            raise ValueError("qp_tol must be > 0")

    @classmethod
    def default(cls, veh: VehicleParams,
                horizon: int = 60,
                position_weight: float = 10.0,
                velocity_weight: float = 5.0,
                angle_weight: float = 5.0,
                rate_weight: float = 2.0,
                input_weight: float = 2e-9,
                input_rate_weight: float = 2e-8) -> "MpcConfig":
        mx = np.array([position_weight] * 3 + [velocity_weight] * 3
                      + [angle_weight] * 3 + [rate_weight] * 3)
        return cls(
            horizon=horizon,
            state_weight=mx,
            input_weight=np.full(N_ROTORS, input_weight),
            input_rate_weight=np.full(N_ROTORS, input_rate_weight),
            u_min=np.zeros(N_ROTORS),
            u_max=np.full(N_ROTORS, veh.max_rotor_speed ** 2),
        )


@dataclass(frozen=True)
class Prediction:
    """Stacked prediction operators over the horizon.

    The state window runs from the current step to horizon-1:
        X_stack = G dx0 + H U_stack,  Y_stack = Cbar X_stack
    G stacks I, Ad, Ad^2, ...; H is strictly block lower triangular with
    block (i, j) = Ad^(i-j-1) Bd for i > j.
    """

    G: np.ndarray      # (12N, 12)
    H: np.ndarray      # (12N, 8N)
    Cbar: np.ndarray   # (4N, 12N)


@dataclass
class ControllerState:
    """Mutable per-controller memory: last applied input and QP warm start."""

    u_prev: np.ndarray              # (8,), absolute squared speeds
    warm_start: np.ndarray          # (8N,), input-deviation sequence
    last_qp_iters: int = 0


def build_prediction(model: LinearModel, horizon: int) -> Prediction:
    """Assemble the stacked G, H, Cbar operators for a discrete model."""
    if model.continuous:
        raise ValueError("prediction needs a discretized model")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    n, m = N_STATES, N_ROTORS
    ad, bd = model.A, model.B

    powers = [np.eye(n)]
    for _ in range(horizon - 1):
        powers.append(powers[-1] @ ad)

    g = np.vstack(powers)
    h = np.zeros((n * horizon, m * horizon))
    # block (i, j) = Ad^(i-j-1) Bd, i > j
    prods = [bd]
    for _ in range(horizon - 2):
        prods.append(ad @ prods[-1])
    for i in range(1, horizon):
        for j in range(i):
            h[i * n:(i + 1) * n, j * m:(j + 1) * m] = prods[i - j - 1]

    cbar = np.kron(np.eye(horizon), model.C)
    return Prediction(G=g, H=h, Cbar=cbar)


def _difference_operator(horizon: int) -> np.ndarray:
    """8N x 8N map from an input sequence to its step-to-step differences."""
    m = N_ROTORS
    d = np.eye(m * horizon)
    for i in range(1, horizon):
        d[i * m:(i + 1) * m, (i - 1) * m:i * m] = -np.eye(m)
    return d


def build_cost(pred: Prediction, cfg: MpcConfig, dx0: np.ndarray,
               x_ref_stack: np.ndarray, du_prev: np.ndarray):
    """Condense the tracking cost onto the stacked input deviations.

    The three penalty terms are state tracking toward ``x_ref_stack``,
    input deviation from the nominal, and input rate of change (with
    ``du_prev`` closing the boundary at the first step). Returns the
    (Hessian, gradient) pair of 0.5 U'PU + q'U.
    """
    n = cfg.horizon
    dx0 = np.asarray(dx0, dtype=float)
    x_ref_stack = np.asarray(x_ref_stack, dtype=float)
    du_prev = np.asarray(du_prev, dtype=float)
    if dx0.shape != (N_STATES,):
        raise ValueError("dx0 must be a 12-vector")
    if x_ref_stack.shape != (N_STATES * n,):
        raise ValueError(f"x_ref_stack must have length {N_STATES * n}")
    if du_prev.shape != (N_ROTORS,):
        raise ValueError("du_prev must be an 8-vector")

    mx = np.tile(cfg.state_weight, n)
    mu = np.tile(cfg.input_weight, n)
    mdu = np.tile(cfg.input_rate_weight, n)

    h = pred.H
    diff = _difference_operator(n)
    hessian = h.T @ (mx[:, None] * h) + np.diag(mu) + diff.T @ (mdu[:, None] * diff)
    hessian = 0.5 * (hessian + hessian.T)

    err = x_ref_stack - pred.G @ dx0
    boundary = np.zeros(N_ROTORS * n)
    boundary[:N_ROTORS] = du_prev
    gradient = -(h.T @ (mx * err) + diff.T @ (mdu * boundary))

    try:
        np.linalg.cholesky(hessian)
    except np.linalg.LinAlgError:
        raise ValueError("cost Hessian is not positive definite; check weights") from None
    return hessian, gradient


def solve_qp(hessian: np.ndarray, gradient: np.ndarray,
             lower: np.ndarray, upper: np.ndarray, cfg: MpcConfig,
             x0: np.ndarray | None = None, return_info: bool = False,
             chol: np.ndarray | None = None):
    """Minimize 0.5 x'Hx + g'x over a box with projected Newton steps.

    Clamped coordinates (at a bound with the gradient pushing outward) are
    frozen; a Newton step on the free block is backtracked along the
    projected path until Armijo decrease holds. Stops when the projected
    gradient falls below ``qp_tol`` scaled by the gradient magnitude.
    Raises ``QpMaxIterations`` (with the best iterate attached) at the
    iteration cap. ``chol`` may carry a precomputed ``cho_factor`` of the
    full Hessian, reused whenever no coordinate is clamped.
    """
    h = np.asarray(hessian, dtype=float)
    g = np.asarray(gradient, dtype=float)
    n = g.shape[0]
    if h.shape != (n, n):
        raise ValueError(f"Hessian shape {h.shape} does not match gradient length {n}")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != (n,) or upper.shape != (n,):
        raise ValueError("bounds must match the gradient length")
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")

    if x0 is None:
        x = np.zeros(n)
    else:
        x = np.asarray(x0, dtype=float).copy()
    x = np.clip(x, lower, upper)
    x[~np.isfinite(x)] = 0.0

    tol = cfg.qp_tol * max(1.0, float(np.max(np.abs(g))) if n else 1.0)

    def objective(v):
        return 0.5 * v @ h @ v + g @ v

    value = objective(x)
    objectives = [value]
    iters = 0
    while True:
        grad = h @ x + g
        residual = float(np.max(np.abs(x - np.clip(x - grad, lower, upper)))) if n else 0.0
        if residual <= tol:
            break
        if iters >= cfg.qp_max_iter:
            raise QpMaxIterations(x, residual)
        iters += 1

        at_lower = (x <= lower) & (grad > 0)
        at_upper = (x >= upper) & (grad < 0)
        free = ~(at_lower | at_upper)
        if not np.any(free):
            break

        all_free = bool(np.all(free))
        if all_free and chol is not None:
            factor = chol
        else:
            try:
                factor = cho_factor(h[np.ix_(free, free)], lower=True)
            except np.linalg.LinAlgError:
                raise ValueError("QP Hessian is not positive definite") from None
        # Newton target on the free block with clamped coordinates fixed
        clamped = ~free
        rhs = g[free].copy()
        if np.any(clamped):
            rhs += h[np.ix_(free, clamped)] @ x[clamped]
        target_free = -cho_solve(factor, rhs)
        step_dir = np.zeros(n)
        step_dir[free] = target_free - x[free]

        descent = step_dir @ grad
        if descent >= 0:
            break  # already optimal on the free block up to rounding

        step = 1.0
        accepted = False
        for _ in range(40):
            cand = np.clip(x + step * step_dir, lower, upper)
            cand_val = objective(cand)
            if cand_val <= value + 0.1 * step * descent:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # no further progress possible at machine precision

        x = cand
        value = cand_val
        objectives.append(value)

    if return_info:
        return x, {"iterations": iters, "residual": residual, "objectives": objectives}
    return x


def _stack_reference(refs: np.ndarray, x_ref: np.ndarray, horizon: int,
                     dt: float) -> np.ndarray:
    """Embed an (N, 4) position-and-heading window into a 12N state stack.

    Velocity references come from forward differences of the position
    window, so a moving reference is tracked without a built-in lag.
    Roll, pitch, and the angular rates target the hover reference; their
    pull is controlled by the state weights.
    """
    stack = np.zeros(N_STATES * horizon)
    for i in range(horizon):
        base = i * N_STATES
        stack[base + 0] = refs[i, 0] - x_ref[0]
        stack[base + 1] = refs[i, 1] - x_ref[1]
        stack[base + 2] = refs[i, 2] - x_ref[2]
        j = min(i, horizon - 2)
        if horizon > 1 and dt > 0:
            stack[base + 3] = (refs[j + 1, 0] - refs[j, 0]) / dt
            stack[base + 4] = (refs[j + 1, 1] - refs[j, 1]) / dt
            stack[base + 5] = (refs[j + 1, 2] - refs[j, 2]) / dt
        stack[base + 8] = wrap_angle(refs[i, 3] - x_ref[8])
    return stack


def mpc_step(x_now: np.ndarray, refs: np.ndarray, ctrl: ControllerState,
             model: LinearModel, cfg: MpcConfig,
             pred: Prediction | None = None,
             hessian: np.ndarray | None = None,
             chol: np.ndarray | None = None) -> np.ndarray:
    """One receding-horizon update: solve the QP, apply the first input.

    ``refs`` is the (N, 4) window of (x, y, z, psi) references. ``pred``
    and ``hessian`` may be passed in to reuse work that does not change
    between steps. Mutates ``ctrl`` (last input, warm start) and returns
    the absolute squared-speed command, always inside the input box.
    """
    if model.continuous:
        raise ValueError("mpc_step needs a discretized model")
    refs = np.asarray(refs, dtype=float)
    if refs.shape != (cfg.horizon, N_OUTPUTS):
        raise ValueError(f"expected a ({cfg.horizon}, 4) reference window, got {refs.shape}")
    if pred is None:
        pred = build_prediction(model, cfg.horizon)

    x_now = np.asarray(x_now, dtype=float)
    dx0 = x_now - model.x_ref
    # track yaw on the wrapped branch nearest the first reference sample
    dx0[8] = wrap_angle(refs[0, 3] - model.x_ref[8]) - wrap_angle(refs[0, 3] - x_now[8])

    x_ref_stack = _stack_reference(refs, model.x_ref, cfg.horizon, model.dt)
    du_prev = ctrl.u_prev - model.u_ref

    if hessian is None:
        hessian, gradient = build_cost(pred, cfg, dx0, x_ref_stack, du_prev)
    else:
        # the boundary rate term only touches the first input block
        mx = np.tile(cfg.state_weight, cfg.horizon)
        err = x_ref_stack - pred.G @ dx0
        gradient = -(pred.H.T @ (mx * err))
        gradient[:N_ROTORS] -= cfg.input_rate_weight * du_prev

    if cfg.constrained:
        lower = np.tile(cfg.u_min - model.u_ref, cfg.horizon)
        upper = np.tile(cfg.u_max - model.u_ref, cfg.horizon)
    else:
        lower = np.full(N_ROTORS * cfg.horizon, -np.inf)
        upper = np.full(N_ROTORS * cfg.horizon, np.inf)

    du_seq, info = solve_qp(hessian, gradient, lower, upper, cfg,
                            x0=ctrl.warm_start, return_info=True, chol=chol)

    u = model.u_ref + du_seq[:N_ROTORS]
    u = np.clip(u, cfg.u_min, cfg.u_max)

    ctrl.u_prev = u.copy()
    ctrl.warm_start = np.concatenate([du_seq[N_ROTORS:], du_seq[-N_ROTORS:]])
    ctrl.last_qp_iters = info["iterations"]
    return u


class MpcController:
    """Receding-horizon controller bound to a model, config, and sampling time.

    Holds the prediction operators, the constant cost Hessian, and the warm
    start between steps. One instance drives one closed loop.
    """

    def __init__(self, model: LinearModel, cfg: MpcConfig, veh: VehicleParams,
                 env: EnvParams):
        if model.continuous:
            raise ValueError("MpcController needs a discretized model")
        self.model = model
        self.cfg = cfg
        self.veh = veh
        self.env = env
        self.pred = build_prediction(model, cfg.horizon)
        zero_stack = np.zeros(N_STATES * cfg.horizon)
        self._hessian, _ = build_cost(self.pred, cfg, np.zeros(N_STATES),
                                      zero_stack, np.zeros(N_ROTORS))
        self._chol = cho_factor(self._hessian, lower=True)
        self.state = ControllerState(
            u_prev=model.u_ref.copy(),
            warm_start=np.zeros(N_ROTORS * cfg.horizon),
        )

    def reset(self):
        self.state = ControllerState(
            u_prev=self.model.u_ref.copy(),
            warm_start=np.zeros(N_ROTORS * self.cfg.horizon),
        )

    @property
    def last_qp_iters(self) -> int:
        return self.state.last_qp_iters

    def command(self, t: float, x_now: np.ndarray, traj) -> np.ndarray:
        refs = ref_window(traj, t, self.cfg.horizon, self.model.dt)
        return mpc_step(x_now, refs, self.state, self.model, self.cfg,
                        pred=self.pred, hessian=self._hessian, chol=self._chol)
