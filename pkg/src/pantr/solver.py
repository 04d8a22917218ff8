"""Proximal solver with trust-region Newton acceleration.

Each iteration takes a forward-backward step for global progress, then tries
an accelerated direction obtained from a reduced trust-region subproblem on
the inactive coordinates.  Candidates are accepted by the classical ratio
test applied to the forward-backward envelope, the radius is adapted from the
same ratio, and the step size ``gamma`` shrinks geometrically whenever the
local quadratic upper bound fails.  ``fbs_solve`` runs the plain
forward-backward iteration with the same step-size control and stopping rule
and doubles as a baseline and test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .core import (
    CompositeProblem,
    EvaluationError,
    FbPoint,
    active_set,
    fb_step,
    prox,
)
from .trust_region import TrProblem, TrResult, default_cg_tol, steihaug_cg

Array = np.ndarray
_EPS = float(np.finfo(float).eps)

Callback = Callable[[int, FbPoint, dict], None]


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    NOT_FINITE = "not_finite"


@dataclass
class PantrParams:
    """Tuning knobs for :func:`pantr_solve`.

    ``mu1 < mu2`` are the acceptance thresholds of the ratio test, ``c1`` /
    ``c2`` / ``c3`` the radius shrink, soft-shrink and growth factors,
    ``delta0`` the initial radius (defaults to ``max(1, ||residual||)`` at the
    first forward-backward point), ``alpha`` the step-size safety factor, and
    ``gamma0`` the initial step size (estimated from a one-sided curvature
    probe when absent).  ``cg_tol`` / ``max_cg_iters`` override the inner CG
    stopping rule; the defaults are a forcing sequence and the reduced
    dimension.
    """

    mu1: float = 0.2
    mu2: float = 0.5
    c1: float = 0.35
    c2: float = 0.99
    c3: float = 10.0
    delta0: Optional[float] = None
    delta_max: float = 1e6
    alpha: float = 0.95
    gamma0: Optional[float] = None
    gamma_min: float = 1e-16
    tol: float = 1e-8
    max_iters: int = 10_000
    cg_tol: Optional[float] = None
    max_cg_iters: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.mu1 < self.mu2 < 1.0):
            raise ValueError("acceptance thresholds require 0 < mu1 < mu2 < 1")
        if not (0.0 < self.c1 < 1.0 < self.c3):
            raise ValueError("radius factors require 0 < c1 < 1 < c3")
        if not (0.0 < self.c2 <= 1.0):
            raise ValueError("radius factor c2 must lie in (0, 1]")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("step-size safety factor must lie in (0, 1)")
        if not self.tol > 0 or not self.gamma_min > 0 or not self.delta_max > 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass
class PantrStats:
    """Per-solve counters and final diagnostics."""

    iterations: int = 0
    accepted_steps: int = 0
    rejected_steps: int = 0
    fb_fallbacks: int = 0
    gamma_halvings: int = 0
    gamma_recoveries: int = 0
    tr_solves: int = 0
    total_cg_iterations: int = 0
    hvp_evaluations: int = 0
    gradient_evaluations: int = 0
    final_residual_inf: float = math.inf
    final_fbe: float = math.inf
    final_gamma: float = math.nan
    status: SolveStatus = SolveStatus.MAX_ITERS


class _CountingProblem:
    """Transparent wrapper counting callback invocations."""

    def __init__(self, p: CompositeProblem):
        self._p = p
        self.dim = p.dim
        self.nonsmooth = p.nonsmooth
        self.n_f = 0
        self.n_grad = 0
        self.n_hvp = 0

    def eval_f(self, x):
        self.n_f += 1
        return self._p.eval_f(x)

    def eval_grad_f(self, x):
        self.n_grad += 1
        return self._p.eval_grad_f(x)

    def eval_hvp(self, x, v):
        self.n_hvp += 1
        return self._p.eval_hvp(x, v)


def candidate_step(
    p: CompositeProblem,
    fb_hat: FbPoint,
    delta: float,
    cg_tol: Optional[float] = None,
    max_cg_iters: Optional[int] = None,
) -> tuple[Array, float, Optional[TrResult]]:
    """Accelerated direction at the forward-backward point ``fb_hat``.

    Splits the coordinates by bound activity at ``fb_hat``: active
    coordinates move by ``-gamma * residual`` while the inactive block solves
    a radius-constrained quadratic whose linear term folds in the coupling
    with the active move via a single full Hessian-vector product.  Returns
    the full-space direction, the model value
    ``q = q_reduced - ||d_active||^2 / (2 gamma)``, and the subproblem result
    (``None`` when every coordinate is active).
    """
    x_hat = fb_hat.x
    gamma = fb_hat.gamma
    res = fb_hat.residual
    aset = active_set(fb_hat, p.nonsmooth)
    act, inact = aset.active, aset.inactive

    d = np.zeros(p.dim)
    d[act] = -gamma * res[act]
    quad_active = float(d[act] @ d[act]) / (2.0 * gamma)
    if inact.size == 0:
        return d, -quad_active, None

    g_red = res[inact].copy()
    if act.size and np.any(d[act]):
        hd = np.asarray(p.eval_hvp(x_hat, d), dtype=float)
        if not np.all(np.isfinite(hd)):
            raise EvaluationError("Hessian-vector product is not finite", x_hat)
        g_red += hd[inact]

    def hvp_reduced(v: Array) -> Array:
        full = np.zeros(p.dim)
        full[inact] = v
        out = np.asarray(p.eval_hvp(x_hat, full), dtype=float)
        return out[inact]

    gnorm = float(np.linalg.norm(g_red))
    tol = default_cg_tol(gnorm) if cg_tol is None else cg_tol
    iters = int(inact.size) if max_cg_iters is None else max_cg_iters
    tr = steihaug_cg(TrProblem(hvp_reduced, g_red, delta, tol, iters))
    d[inact] = tr.d_J
    return d, tr.model_value - quad_active, tr


def acceptance_ratio(fbe_hat: float, fbe_trial: float, q_d: float) -> float:
    """Achieved-over-predicted envelope decrease; ``-inf`` for a degenerate model."""
    if q_d >= 0.0:
        return -math.inf
    rho = (fbe_hat - fbe_trial) / (-q_d)
    return -math.inf if math.isnan(rho) else rho


def update_radius(
    delta: float,
    rho: float,
    d_norm: float,
    params: PantrParams,
    x_norm: float = 0.0,
) -> float:
    """Next trust-region radius from the acceptance ratio.

    Grows to ``max(c3 ||d||, delta)`` on very successful steps, shrinks
    softly by ``c2`` on merely successful ones, and collapses to
    ``c1 ||d||`` on rejections.  A small floor relative to the iterate scale
    prevents stalls from repeated rejections near roundoff.
    """
    if rho >= params.mu2:
        new = max(params.c3 * d_norm, delta)
    elif rho >= params.mu1:
        new = params.c2 * delta
    else:
        new = params.c1 * d_norm
    return min(max(new, 1e-12 * max(1.0, x_norm)), params.delta_max)


def _quadratic_bound_holds(
    f_x: float,
    grad_x: Array,
    x: Array,
    x_hat: Array,
    f_hat: float,
    gamma: float,
    alpha: float,
) -> bool:
    diff = x_hat - x
    rhs = f_x + float(grad_x @ diff) + (alpha / (2.0 * gamma)) * float(diff @ diff)
    return f_hat <= rhs + 10.0 * _EPS * abs(f_x)


def check_gamma(p: CompositeProblem, x: Array, fb: FbPoint, alpha: float) -> bool:
    """Whether the step size behind ``fb`` satisfies the quadratic upper bound.

    Evaluates the smooth term at the forward-backward point and tests
    ``f(x_hat) <= f(x) + <grad f(x), x_hat - x> + alpha/(2 gamma) ||x_hat - x||^2``
    with a roundoff slack of ``10 eps |f(x)|``.
    """
    f_hat = float(p.eval_f(fb.x_hat))
    return np.isfinite(f_hat) and _quadratic_bound_holds(
        fb.f_x, fb.grad_x, np.asarray(x, dtype=float), fb.x_hat, f_hat, fb.gamma, alpha
    )


def projected_gradient_residual(nonsmooth, x: Array, grad_x: Array) -> float:
    """Step-size independent stationarity measure ``||x - prox_g(x - grad)||_inf``."""
    return float(np.linalg.norm(x - prox(nonsmooth, x - grad_x, 1.0), ord=np.inf))


def _initial_gamma(prob, x0: Array, grad0: Array, alpha: float) -> float:
    # One finite-difference probe of the gradient's local Lipschitz modulus.
    rng = np.random.default_rng(0)
    u = rng.standard_normal(x0.size)
    u /= float(np.linalg.norm(u))
    h = 1e-4 * (1.0 + float(np.linalg.norm(x0)))
    g1 = np.asarray(prob.eval_grad_f(x0 + h * u), dtype=float)
    if not np.all(np.isfinite(g1)):
        raise EvaluationError("gradient is not finite", x0 + h * u)
    lips = float(np.linalg.norm(g1 - grad0)) / h
    return alpha / max(lips, 1e-12)


def pantr_solve(
    p: CompositeProblem,
    x0: Array,
    params: Optional[PantrParams] = None,
    callback: Optional[Callback] = None,
) -> tuple[Array, PantrStats]:
    """Minimize a composite problem with trust-region accelerated steps.

    Per iteration: (1) halve ``gamma`` until the quadratic upper bound holds
    at the current forward-backward pair, (2) stop once the projected-gradient
    residual at unit step size drops below ``params.tol``, (3) compute the
    candidate direction at the forward-backward point, (4) accept it when the
    envelope decrease ratio reaches ``mu1`` and update the radius, otherwise
    (5) fall back to the forward-backward point.  The envelope value is
    nonincreasing along the iterates for constant ``gamma``.

    ``callback(k, fb, info)`` is invoked once per iteration with the
    (post-halving) forward-backward data at the iteration's starting point
    and a dict of diagnostics.
    """
    if params is None:
        params = PantrParams()
    prob = _CountingProblem(p)
    x = np.array(x0, dtype=float)
    stats = PantrStats()
    gamma = math.nan

    try:
        f0 = float(prob.eval_f(x))
        g0 = np.asarray(prob.eval_grad_f(x), dtype=float)
        if not np.isfinite(f0) or not np.all(np.isfinite(g0)):
            raise EvaluationError("non-finite problem data at the start", x)
        gamma = params.gamma0 if params.gamma0 is not None else _initial_gamma(
            prob, x, g0, params.alpha
        )
        fb = fb_step(prob, x, gamma, f_x=f0, grad_x=g0)
    except EvaluationError:
        stats.status = SolveStatus.NOT_FINITE
        stats.gradient_evaluations = prob.n_grad
        stats.hvp_evaluations = prob.n_hvp
        stats.final_gamma = gamma
        return x, stats

    delta = params.delta0
    status = SolveStatus.MAX_ITERS
    while stats.iterations < params.max_iters:
        crit = projected_gradient_residual(prob.nonsmooth, x, fb.grad_x)
        if crit <= params.tol:
            status = SolveStatus.CONVERGED
            break
        if not np.isfinite(fb.fbe):
            status = SolveStatus.NOT_FINITE
            break

        # Resolution guard: with the criterion unmet, an exact fixed point of
        # the forward-backward map can only mean gamma underflowed the
        # iterate's float resolution; grow it just enough to move again.
        recoveries = 0
        while np.array_equal(fb.x_hat, fb.x) and recoveries < 100:
            gamma *= 2.0
            recoveries += 1
            stats.gamma_recoveries += 1
            fb = fb_step(prob, x, gamma, f_x=fb.f_x, grad_x=fb.grad_x)

        try:
            while True:
                f_hat = float(prob.eval_f(fb.x_hat))
                ok = np.isfinite(f_hat) and _quadratic_bound_holds(
                    fb.f_x, fb.grad_x, fb.x, fb.x_hat, f_hat, gamma, params.alpha
                )
                if ok or gamma <= params.gamma_min:
                    break
                gamma = max(0.5 * gamma, params.gamma_min)
                stats.gamma_halvings += 1
                fb = fb_step(prob, x, gamma, f_x=fb.f_x, grad_x=fb.grad_x)
            fb_hat = fb_step(prob, fb.x_hat, gamma, f_x=f_hat)
        except EvaluationError:
            status = SolveStatus.NOT_FINITE
            break

        if delta is None:
            delta = min(max(1.0, float(np.linalg.norm(fb_hat.residual))), params.delta_max)

        try:
            d, q_d, tr = candidate_step(
                prob, fb_hat, delta, params.cg_tol, params.max_cg_iters
            )
            if tr is not None:
                stats.tr_solves += 1
                stats.total_cg_iterations += tr.cg_iterations
        except EvaluationError:
            d, q_d, tr = np.zeros_like(x), 0.0, None

        d_norm = float(np.linalg.norm(d))
        fb_trial = None
        rho = -math.inf
        if q_d < 0.0 and d_norm > 0.0:
            try:
                fb_trial = fb_step(prob, fb_hat.x + d, gamma)
                rho = acceptance_ratio(fb_hat.fbe, fb_trial.fbe, q_d)
            except EvaluationError:
                fb_trial = None
                rho = -math.inf
            if rho < params.mu1:
                stats.rejected_steps += 1
        delta = update_radius(delta, rho, d_norm, params, x_norm=float(np.linalg.norm(fb_hat.x)))

        fb_start = fb
        accepted = rho >= params.mu1 and fb_trial is not None
        if accepted:
            x, fb = fb_trial.x, fb_trial
            stats.accepted_steps += 1
        else:
            x, fb = fb_hat.x, fb_hat
            stats.fb_fallbacks += 1
        stats.iterations += 1

        if callback is not None:
            callback(
                stats.iterations - 1,
                fb_start,
                {
                    "gamma": gamma,
                    "delta": delta,
                    "rho": rho,
                    "accepted": accepted,
                    "d_norm": d_norm,
                    "tr_status": tr.status if tr is not None else None,
                    "cg_iterations": tr.cg_iterations if tr is not None else 0,
                    "fb_hat": fb_hat,
                },
            )

    stats.status = status
    stats.final_residual_inf = projected_gradient_residual(prob.nonsmooth, x, fb.grad_x)
    stats.final_fbe = fb.fbe
    stats.final_gamma = gamma
    stats.gradient_evaluations = prob.n_grad
    stats.hvp_evaluations = prob.n_hvp
    return x, stats


def fbs_solve(
    p: CompositeProblem,
    x0: Array,
    tol: float = 1e-8,
    max_iters: int = 10_000,
    alpha: float = 0.95,
    gamma0: Optional[float] = None,
    gamma_min: float = 1e-16,
    callback: Optional[Callback] = None,
) -> tuple[Array, PantrStats]:
    """Plain forward-backward iteration with adaptive step size.

    Shares the step-size check and stopping rule with :func:`pantr_solve`, so
    it serves both as a baseline and as an oracle: with every accelerated
    candidate rejected, the two solvers generate identical iterates.
    ``alpha`` may be 1.0 to disable the safety margin in the step-size check.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError("step-size safety factor must lie in (0, 1]")
    prob = _CountingProblem(p)
    x = np.array(x0, dtype=float)
    stats = PantrStats()
    gamma = math.nan

    try:
        f0 = float(prob.eval_f(x))
        g0 = np.asarray(prob.eval_grad_f(x), dtype=float)
        if not np.isfinite(f0) or not np.all(np.isfinite(g0)):
            raise EvaluationError("non-finite problem data at the start", x)
        gamma = gamma0 if gamma0 is not None else _initial_gamma(prob, x, g0, alpha)
        fb = fb_step(prob, x, gamma, f_x=f0, grad_x=g0)
    except EvaluationError:
        stats.status = SolveStatus.NOT_FINITE
        stats.gradient_evaluations = prob.n_grad
        stats.final_gamma = gamma
        return x, stats

    status = SolveStatus.MAX_ITERS
    while stats.iterations < max_iters:
        crit = projected_gradient_residual(prob.nonsmooth, x, fb.grad_x)
        if crit <= tol:
            status = SolveStatus.CONVERGED
            break
        if not np.isfinite(fb.fbe):
            status = SolveStatus.NOT_FINITE
            break
        recoveries = 0
        while np.array_equal(fb.x_hat, fb.x) and recoveries < 100:
            gamma *= 2.0
            recoveries += 1
            stats.gamma_recoveries += 1
            fb = fb_step(prob, x, gamma, f_x=fb.f_x, grad_x=fb.grad_x)
        try:
            while True:
                f_hat = float(prob.eval_f(fb.x_hat))
                ok = np.isfinite(f_hat) and _quadratic_bound_holds(
                    fb.f_x, fb.grad_x, fb.x, fb.x_hat, f_hat, gamma, alpha
                )
                if ok or gamma <= gamma_min:
                    break
                gamma = max(0.5 * gamma, gamma_min)
                stats.gamma_halvings += 1
                fb = fb_step(prob, x, gamma, f_x=fb.f_x, grad_x=fb.grad_x)
            fb_next = fb_step(prob, fb.x_hat, gamma, f_x=f_hat)
        except EvaluationError:
            status = SolveStatus.NOT_FINITE
            break
        fb_start = fb
        x, fb = fb.x_hat, fb_next
        stats.iterations += 1
        stats.fb_fallbacks += 1
        if callback is not None:
            callback(stats.iterations - 1, fb_start, {"gamma": gamma})

    stats.status = status
    stats.final_residual_inf = projected_gradient_residual(prob.nonsmooth, x, fb.grad_x)
    stats.final_fbe = fb.fbe
    stats.final_gamma = gamma
    stats.gradient_evaluations = prob.n_grad
    stats.hvp_evaluations = prob.n_hvp
    return x, stats
