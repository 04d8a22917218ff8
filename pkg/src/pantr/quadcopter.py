"""Quadcopter model, single-shooting optimal control problem, and adjoints.

State ``x = (p, v, theta)`` with position, velocity, and Euler angles (all in
R^3); input ``u = (a_t, omega)`` with collective thrust and angular rates.
Continuous dynamics

    p' = v,   v' = R(theta) (0, 0, a_t) + (0, 0, -9.81),   theta' = omega,

where ``R = Rz(theta_z) Ry(theta_y) Rx(theta_x)`` (extrinsic Z-Y-X Euler
convention), discretized by one classical Runge-Kutta step per 0.1 s sample.
The finite-horizon problem penalizes distance to a reference position plus
velocity, attitude, rate, and thrust effort; the state constraints limit the
tilt angles and keep the horizontal position outside a cylinder of radius
0.1 at the origin.  Gradients are hand-coded discrete adjoints through the
integrator stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .alm import ConstrainedNlp
from .core import Box, EvaluationError

Array = np.ndarray

GRAVITY = 9.81  # m/s^2


@dataclass(frozen=True)
class QuadcopterModel:
    ts: float = 0.1  # sample time, s


def rotation_matrix(theta: Array) -> Array:
    """Body-to-world rotation ``Rz(theta_z) Ry(theta_y) Rx(theta_x)``."""
    a, b, c = theta
    sa, ca = math.sin(a), math.cos(a)
    sb, cb = math.sin(b), math.cos(b)
    sc, cc = math.sin(c), math.cos(c)
    return np.array(
        [
            [cc * cb, cc * sb * sa - sc * ca, cc * sb * ca + sc * sa],
            [sc * cb, sc * sb * sa + cc * ca, sc * sb * ca - cc * sa],
            [-sb, cb * sa, cb * ca],
        ]
    )


def dynamics(x: Array, u: Array) -> Array:
    """Continuous-time state derivative."""
    a, b, c = x[6], x[7], x[8]
    at = u[0]
    sa, ca = math.sin(a), math.cos(a)
    sb, cb = math.sin(b), math.cos(b)
    sc, cc = math.sin(c), math.cos(c)
    out = np.empty(9)
    out[0:3] = x[3:6]
    # thrust direction = third column of the rotation matrix
    out[3] = at * (cc * sb * ca + sc * sa)
    out[4] = at * (sc * sb * ca - cc * sa)
    out[5] = at * (cb * ca) - GRAVITY
    out[6:9] = u[1:4]
    return out


def dynamics_jacobians(x: Array, u: Array) -> tuple[Array, Array]:
    """Jacobians of :func:`dynamics` with respect to state and input."""
    a, b, c = x[6], x[7], x[8]
    at = u[0]
    sa, ca = math.sin(a), math.cos(a)
    sb, cb = math.sin(b), math.cos(b)
    sc, cc = math.sin(c), math.cos(c)
    r = np.array([cc * sb * ca + sc * sa, sc * sb * ca - cc * sa, cb * ca])
    dr_da = np.array([-cc * sb * sa + sc * ca, -sc * sb * sa - cc * ca, -cb * sa])
    dr_db = np.array([cc * cb * ca, sc * cb * ca, -sb * ca])
    dr_dc = np.array([-sc * sb * ca + cc * sa, cc * sb * ca + sc * sa, 0.0])
    A = np.zeros((9, 9))
    A[0, 3] = A[1, 4] = A[2, 5] = 1.0
    A[3:6, 6] = at * dr_da
    A[3:6, 7] = at * dr_db
    A[3:6, 8] = at * dr_dc
    B = np.zeros((9, 4))
    B[3:6, 0] = r
    B[6, 1] = B[7, 2] = B[8, 3] = 1.0
    return A, B


def _stage_pullback(x: Array, u: Array, mu: Array) -> tuple[Array, Array]:
    # (A^T mu, B^T mu) for one stage, exploiting the sparsity of the Jacobians:
    # only the p->v identity and the v'->theta coupling blocks are nonzero.
    a, b, c = x[6], x[7], x[8]
    at = u[0]
    sa, ca = math.sin(a), math.cos(a)
    sb, cb = math.sin(b), math.cos(b)
    sc, cc = math.sin(c), math.cos(c)
    m3, m4, m5 = mu[3], mu[4], mu[5]
    w = np.zeros(9)
    w[3:6] = mu[0:3]
    w[6] = at * ((-cc * sb * sa + sc * ca) * m3 + (-sc * sb * sa - cc * ca) * m4 - cb * sa * m5)
    w[7] = at * (cc * cb * ca * m3 + sc * cb * ca * m4 - sb * ca * m5)
    w[8] = at * ((-sc * sb * ca + cc * sa) * m3 + (cc * sb * ca + sc * sa) * m4)
    gu = np.empty(4)
    gu[0] = (cc * sb * ca + sc * sa) * m3 + (sc * sb * ca - cc * sa) * m4 + cb * ca * m5
    gu[1:4] = mu[6:9]
    return w, gu


def _rk4(f: Callable[[Array, Array], Array], x: Array, u: Array, h: float) -> Array:
    k1 = f(x, u)
    k2 = f(x + 0.5 * h * k1, u)
    k3 = f(x + 0.5 * h * k2, u)
    k4 = f(x + h * k3, u)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_step(model: QuadcopterModel, x: Array, u: Array) -> Array:
    """One classical fourth-order Runge-Kutta step of the quadcopter dynamics."""
    return _rk4(dynamics, np.asarray(x, dtype=float), np.asarray(u, dtype=float), model.ts)


def _rk4_stages(h: float, x: Array, u: Array) -> Array:
    # Inner stage states (x2, x3, x4) of one integrator step.
    x2 = x + 0.5 * h * dynamics(x, u)
    x3 = x + 0.5 * h * dynamics(x2, u)
    x4 = x + h * dynamics(x3, u)
    return np.stack([x2, x3, x4])


def _rk4_vjp_stages(
    h: float, x: Array, u: Array, stages: Array, lam: Array
) -> tuple[Array, Array]:
    x2, x3, x4 = stages
    mu4 = (h / 6.0) * lam
    w4, gu4 = _stage_pullback(x4, u, mu4)
    mu3 = (h / 3.0) * lam + h * w4
    w3, gu3 = _stage_pullback(x3, u, mu3)
    mu2 = (h / 3.0) * lam + 0.5 * h * w3
    w2, gu2 = _stage_pullback(x2, u, mu2)
    mu1 = (h / 6.0) * lam + 0.5 * h * w2
    w1, gu1 = _stage_pullback(x, u, mu1)
    lam_prev = lam + w1 + w2 + w3 + w4
    grad_u = gu1 + gu2 + gu3 + gu4
    return lam_prev, grad_u


def rk4_vjp(model: QuadcopterModel, x: Array, u: Array, lam: Array) -> tuple[Array, Array]:
    """Pull a costate back through one integrator step.

    Returns ``(d step/d x)^T lam`` and ``(d step/d u)^T lam`` by reverse
    accumulation through the four stages.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return _rk4_vjp_stages(model.ts, x, u, _rk4_stages(model.ts, x, u), lam)


@dataclass(frozen=True)
class OcpSpec:
    """Finite-horizon optimal control problem for the quadcopter.

    Stage cost ``10 ||p - p_ref||^2 + ||v||^2 + ||theta||^2 + 10 ||omega||^2
    + 1e-4 a_t^2`` and terminal cost without the input terms.  Inputs are
    boxed; the state constraint vector is
    ``(theta_x, theta_y, cos(theta_x) cos(theta_y), p_x^2 + p_y^2)`` with
    bounds limiting the tilt and excluding the cylinder of radius 0.1.
    """

    horizon: int
    model: QuadcopterModel = QuadcopterModel()
    p_ref: Array = field(default_factory=lambda: np.array([0.25, 0.25, 0.5]))
    pos_weight: float = 10.0
    omega_weight: float = 10.0
    thrust_weight: float = 1e-4
    u_lb: Array = field(default_factory=lambda: np.array([0.0, -0.1, -0.1, -0.1]))
    u_ub: Array = field(default_factory=lambda: np.array([49.0, 0.1, 0.1, 0.1]))
    z_lb: Array = field(
        default_factory=lambda: np.array(
            [-math.pi / 2, -math.pi / 2, math.cos(math.pi / 6), 0.1**2]
        )
    )
    z_ub: Array = field(
        default_factory=lambda: np.array([math.pi / 2, math.pi / 2, math.inf, math.inf])
    )

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")


def stage_cost(spec: OcpSpec, x: Array, u: Array) -> float:
    dp = x[0:3] - spec.p_ref
    return (
        spec.pos_weight * float(dp @ dp)
        + float(x[3:6] @ x[3:6])
        + float(x[6:9] @ x[6:9])
        + spec.omega_weight * float(u[1:4] @ u[1:4])
        + spec.thrust_weight * u[0] ** 2
    )


def stage_cost_grads(spec: OcpSpec, x: Array, u: Array) -> tuple[Array, Array]:
    gx = np.empty(9)
    gx[0:3] = 2.0 * spec.pos_weight * (x[0:3] - spec.p_ref)
    gx[3:6] = 2.0 * x[3:6]
    gx[6:9] = 2.0 * x[6:9]
    gu = np.empty(4)
    gu[0] = 2.0 * spec.thrust_weight * u[0]
    gu[1:4] = 2.0 * spec.omega_weight * u[1:4]
    return gx, gu


def terminal_cost(spec: OcpSpec, x: Array) -> float:
    dp = x[0:3] - spec.p_ref
    return spec.pos_weight * float(dp @ dp) + float(x[3:6] @ x[3:6]) + float(x[6:9] @ x[6:9])


def terminal_cost_grad(spec: OcpSpec, x: Array) -> Array:
    gx = np.empty(9)
    gx[0:3] = 2.0 * spec.pos_weight * (x[0:3] - spec.p_ref)
    gx[3:6] = 2.0 * x[3:6]
    gx[6:9] = 2.0 * x[6:9]
    return gx


def state_constraint(x: Array) -> Array:
    """Tilt-angle and cylinder-avoidance constraint values at one state."""
    a, b = x[6], x[7]
    return np.array([a, b, math.cos(a) * math.cos(b), x[0] ** 2 + x[1] ** 2])


def state_constraint_vjp(x: Array, w: Array) -> Array:
    """Transposed-Jacobian product of :func:`state_constraint`."""
    a, b = x[6], x[7]
    out = np.zeros(9)
    out[0] = 2.0 * x[0] * w[3]
    out[1] = 2.0 * x[1] * w[3]
    out[6] = w[0] - math.sin(a) * math.cos(b) * w[2]
    out[7] = w[1] - math.cos(a) * math.sin(b) * w[2]
    return out


def _rollout_with_stages(spec: OcpSpec, x_init: Array, u_seq: Array) -> tuple[Array, Array]:
    h = spec.model.ts
    n = spec.horizon
    u = np.asarray(u_seq, dtype=float).reshape(n, 4)
    states = np.empty((n + 1, 9))
    stages = np.empty((n, 3, 9))
    states[0] = np.asarray(x_init, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            x = states[k]
            try:
                k1 = dynamics(x, u[k])
                x2 = x + 0.5 * h * k1
                k2 = dynamics(x2, u[k])
                x3 = x + 0.5 * h * k2
                k3 = dynamics(x3, u[k])
                x4 = x + h * k3
                k4 = dynamics(x4, u[k])
            except ValueError:  # sin/cos of an overflowed angle
                raise EvaluationError("state trajectory is not finite", u_seq)
            stages[k, 0], stages[k, 1], stages[k, 2] = x2, x3, x4
            states[k + 1] = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(states[k + 1])):
                raise EvaluationError("state trajectory is not finite", u_seq)
    return states, stages


def rollout(spec: OcpSpec, x_init: Array, u_seq: Array) -> Array:
    """Forward simulation of the input sequence; shape ``(horizon + 1, 9)``."""
    return _rollout_with_stages(spec, x_init, u_seq)[0]


def shoot(spec: OcpSpec, x_init: Array, u_seq: Array) -> tuple[float, Array]:
    """Total cost of the rollout together with the visited states."""
    n = spec.horizon
    u = np.asarray(u_seq, dtype=float).reshape(n, 4)
    states = rollout(spec, x_init, u_seq)
    cost = terminal_cost(spec, states[n])
    for k in range(n):
        cost += stage_cost(spec, states[k], u[k])
    return cost, states


def shoot_adjoint(
    spec: OcpSpec,
    x_init: Array,
    u_seq: Array,
    states: Array = None,
    stages: Array = None,
) -> Array:
    """Gradient of the rollout cost with respect to the input sequence.

    Reverse sweep: seeds the costate with the terminal-cost gradient, pulls
    it back through each integrator step, and collects the per-stage input
    gradients.  ``states`` / ``stages`` may be supplied to reuse a forward
    simulation.
    """
    h = spec.model.ts
    n = spec.horizon
    u = np.asarray(u_seq, dtype=float).reshape(n, 4)
    if states is None or stages is None:
        states, stages = _rollout_with_stages(spec, x_init, u_seq)
    grad = np.empty((n, 4))
    lam = terminal_cost_grad(spec, states[n])
    for k in range(n - 1, -1, -1):
        lam, gu = _rk4_vjp_stages(h, states[k], u[k], stages[k], lam)
        gx, gu_cost = stage_cost_grads(spec, states[k], u[k])
        grad[k] = gu + gu_cost
        lam = lam + gx
    return grad.reshape(-1)


def _constraint_stack(spec: OcpSpec, states: Array) -> Array:
    # Constraints apply to the predicted states 1..N; the initial state is data.
    return np.concatenate([state_constraint(states[k]) for k in range(1, spec.horizon + 1)])


def _constraint_jvp_t(spec: OcpSpec, states: Array, stages: Array, u_seq: Array, w: Array) -> Array:
    h = spec.model.ts
    n = spec.horizon
    u = np.asarray(u_seq, dtype=float).reshape(n, 4)
    w = np.asarray(w, dtype=float).reshape(n, 4)
    grad = np.empty((n, 4))
    lam = state_constraint_vjp(states[n], w[n - 1])
    for k in range(n - 1, -1, -1):
        lam, gu = _rk4_vjp_stages(h, states[k], u[k], stages[k], lam)
        grad[k] = gu
        if k >= 1:
            lam = lam + state_constraint_vjp(states[k], w[k - 1])
    return grad.reshape(-1)


def _lagrangian_grad(spec: OcpSpec, states: Array, stages: Array, u_seq: Array, w: Array) -> Array:
    # gradient of cost(u) + w^T constraints(u) in a single reverse sweep
    h = spec.model.ts
    n = spec.horizon
    u = np.asarray(u_seq, dtype=float).reshape(n, 4)
    w = np.asarray(w, dtype=float).reshape(n, 4)
    grad = np.empty((n, 4))
    lam = terminal_cost_grad(spec, states[n]) + state_constraint_vjp(states[n], w[n - 1])
    for k in range(n - 1, -1, -1):
        lam, gu = _rk4_vjp_stages(h, states[k], u[k], stages[k], lam)
        gx, gu_cost = stage_cost_grads(spec, states[k], u[k])
        grad[k] = gu + gu_cost
        lam = lam + gx
        if k >= 1:
            lam = lam + state_constraint_vjp(states[k], w[k - 1])
    return grad.reshape(-1)


def ocp_as_nlp(spec: OcpSpec, x_init: Array, state_constraints: bool = True) -> ConstrainedNlp:
    """Single-shooting transcription with the inputs as the only decision variables.

    A one-slot rollout cache keyed on the input bytes lets the cost, gradient
    and constraint callbacks share the forward simulation at a common point.
    """
    n = spec.horizon
    x_init = np.asarray(x_init, dtype=float).copy()
    cache: dict = {"key": None, "states": None, "stages": None, "cost": None}

    def _simulate(u: Array) -> tuple[Array, Array]:
        u = np.asarray(u, dtype=float)
        key = u.tobytes()
        if cache["key"] != key:
            cache["states"], cache["stages"] = _rollout_with_stages(spec, x_init, u)
            cache["cost"] = None
            cache["key"] = key
        return cache["states"], cache["stages"]

    def eval_f(u: Array) -> float:
        states, _ = _simulate(u)
        if cache["cost"] is None:
            uk = np.asarray(u, dtype=float).reshape(n, 4)
            cost = terminal_cost(spec, states[n])
            for k in range(n):
                cost += stage_cost(spec, states[k], uk[k])
            cache["cost"] = cost
        return cache["cost"]

    def eval_grad_f(u: Array) -> Array:
        states, stages = _simulate(u)
        return shoot_adjoint(spec, x_init, u, states=states, stages=stages)

    def eval_g(u: Array) -> Array:
        return _constraint_stack(spec, _simulate(u)[0])

    def eval_g_jvp_t(u: Array, w: Array) -> Array:
        states, stages = _simulate(u)
        return _constraint_jvp_t(spec, states, stages, u, w)

    def eval_grad_lagrangian(u: Array, w: Array) -> Array:
        states, stages = _simulate(u)
        return _lagrangian_grad(spec, states, stages, u, w)

    m = 4 * n if state_constraints else 0
    variable_box = Box(np.tile(spec.u_lb, n), np.tile(spec.u_ub, n))
    if state_constraints:
        constraint_box = Box(np.tile(spec.z_lb, n), np.tile(spec.z_ub, n))
    else:
        constraint_box = Box(np.zeros(0), np.zeros(0))
    return ConstrainedNlp(
        dim=4 * n,
        n_constraints=m,
        eval_f=eval_f,
        eval_grad_f=eval_grad_f,
        eval_g=eval_g,
        eval_g_jvp_t=eval_g_jvp_t,
        variable_box=variable_box,
        constraint_box=constraint_box,
        eval_grad_lagrangian=eval_grad_lagrangian if state_constraints else None,
    )
