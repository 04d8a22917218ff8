"""Augmented Lagrangian outer loop.

Wraps a box-and-general-constrained problem
``min f(x)  s.t.  x in C,  g(x) in D`` into a sequence of composite inner
problems ``min f(x) + 0.5 dist^2_sigma(g(x) + y/sigma, D) + indicator_C(x)``,
alternating inner minimization with first-order multiplier updates, a
geometric penalty schedule on stagnating rows, and a shrinking inner
tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .core import Box, CompositeProblem, dist_sq_sigma
from .solver import PantrParams, PantrStats, SolveStatus, fbs_solve, pantr_solve

Array = np.ndarray
_SQRT_EPS = math.sqrt(float(np.finfo(float).eps))


@dataclass
class ConstrainedNlp:
    """Problem data for ``min f(x) s.t. x in C, g(x) in D``.

    ``eval_g_jvp_t(x, w)`` must return the transposed-Jacobian product
    ``grad g(x)^T w``.  ``variable_box`` is ``C``; ``constraint_box`` is
    ``D`` and must have ``n_constraints`` rows.  ``eval_grad_lagrangian`` is
    an optional fused callback returning ``grad f(x) + grad g(x)^T w`` in one
    pass; when absent the two separate callbacks are combined instead.
    """

    dim: int
    n_constraints: int
    eval_f: Callable[[Array], float]
    eval_grad_f: Callable[[Array], Array]
    eval_g: Callable[[Array], Array]
    eval_g_jvp_t: Callable[[Array, Array], Array]
    variable_box: Box
    constraint_box: Box
    eval_grad_lagrangian: Optional[Callable[[Array, Array], Array]] = None


@dataclass
class AlmParams:
    """Outer-loop schedule.

    Defaults follow the benchmark setup: initial penalty 1e4 grown by a
    factor of 5 on rows without sufficient progress, inner tolerance starting
    at 100 and divided by 10 each round down to ``final_tol``, at most 250
    inner iterations per subproblem.  ``inner_solver`` selects the
    accelerated solver or the plain forward-backward baseline.
    """

    initial_penalty: float = 1e4
    penalty_factor: float = 5.0
    initial_inner_tol: float = 100.0
    inner_tol_factor: float = 10.0
    final_tol: float = 1e-8
    constraint_tol: float = 1e-8
    max_inner_iters: int = 250
    max_outer_iters: int = 50
    y0: Optional[Array] = None
    sigma_max: float = 1e12
    inner_solver: str = "pantr"

    def __post_init__(self):
        positive = (
            self.initial_penalty,
            self.initial_inner_tol,
            self.final_tol,
            self.constraint_tol,
            self.sigma_max,
        )
        if any(not v > 0 for v in positive):
            raise ValueError("penalties and tolerances must be positive")
        if not self.penalty_factor > 1 or not self.inner_tol_factor > 1:
            raise ValueError("schedule factors must exceed 1")
        if self.max_inner_iters < 1 or self.max_outer_iters < 1:
            raise ValueError("iteration limits must be positive")
        if self.inner_solver not in ("pantr", "fbs"):
            raise ValueError("inner_solver must be 'pantr' or 'fbs'")


@dataclass
class AlmState:
    """Multipliers, penalties and schedule state between outer iterations."""

    y: Array
    sigma: Array
    inner_tol: float
    outer_iteration: int = 0
    violation: float = math.inf
    violation_vec: Optional[Array] = None


class AlmStatus(str, Enum):
    CONVERGED = "converged"
    MAX_OUTER_ITERS = "max_outer_iters"
    INFEASIBLE_SUSPECTED = "infeasible_suspected"
    NOT_FINITE = "not_finite"


@dataclass
class AlmStats:
    outer_iterations: int = 0
    inner_iterations: int = 0
    cg_iterations: int = 0
    tr_solves: int = 0
    gamma_halvings: int = 0
    gradient_evaluations: int = 0
    hvp_evaluations: int = 0
    final_residual_inf: float = math.inf
    final_violation: float = math.inf
    status: AlmStatus = AlmStatus.MAX_OUTER_ITERS


def finite_difference_hvp(eval_grad_f: Callable[[Array], Array]) -> Callable[[Array, Array], Array]:
    """Central-difference Hessian-vector product on a gradient callback.

    Step ``sqrt(eps) * (1 + ||x||) / ||v||`` so the probe displacement scales
    with the iterate, independent of ``||v||``.
    """

    def hvp(x: Array, v: Array) -> Array:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        vnorm = float(np.linalg.norm(v))
        if vnorm == 0.0:
            return np.zeros_like(v)
        h = _SQRT_EPS * (1.0 + float(np.linalg.norm(x))) / vnorm
        gp = np.asarray(eval_grad_f(x + h * v), dtype=float)
        gm = np.asarray(eval_grad_f(x - h * v), dtype=float)
        return (gp - gm) / (2.0 * h)

    return hvp


def multiplier_estimate(nlp: ConstrainedNlp, st: AlmState, x: Array) -> tuple[Array, Array]:
    """First-order multiplier estimate and per-row constraint violation at ``x``."""
    gx = np.asarray(nlp.eval_g(x), dtype=float)
    z = gx + st.y / st.sigma
    proj = np.clip(z, nlp.constraint_box.lb, nlp.constraint_box.ub)
    y_hat = st.sigma * (z - proj)
    violation = np.abs(gx - proj)
    return y_hat, violation


def build_inner(nlp: ConstrainedNlp, st: AlmState) -> CompositeProblem:
    """Composite inner problem for the current multipliers and penalties.

    The smooth term is ``f`` plus the weighted squared distance of the
    shifted constraint values to ``D``; its gradient pulls the multiplier
    estimate back through the constraint Jacobian.  The Hessian-vector
    product is a central finite difference on that gradient, and the
    nonsmooth term is the variable box.
    """
    sigma = st.sigma.copy()
    y = st.y.copy()
    box_d = nlp.constraint_box

    def eval_f(x: Array) -> float:
        z = np.asarray(nlp.eval_g(x), dtype=float) + y / sigma
        value, _ = dist_sq_sigma(z, box_d, sigma)
        return float(nlp.eval_f(x)) + value

    if nlp.eval_grad_lagrangian is not None:

        def eval_grad_f(x: Array) -> Array:
            z = np.asarray(nlp.eval_g(x), dtype=float) + y / sigma
            _, y_hat = dist_sq_sigma(z, box_d, sigma)
            return np.asarray(nlp.eval_grad_lagrangian(x, y_hat), dtype=float)

    else:

        def eval_grad_f(x: Array) -> Array:
            z = np.asarray(nlp.eval_g(x), dtype=float) + y / sigma
            _, y_hat = dist_sq_sigma(z, box_d, sigma)
            return np.asarray(nlp.eval_grad_f(x), dtype=float) + np.asarray(
                nlp.eval_g_jvp_t(x, y_hat), dtype=float
            )

    return CompositeProblem(
        dim=nlp.dim,
        eval_f=eval_f,
        eval_grad_f=eval_grad_f,
        eval_hvp=finite_difference_hvp(eval_grad_f),
        nonsmooth=Box(nlp.variable_box.lb, nlp.variable_box.ub),
    )


def update_multipliers(nlp: ConstrainedNlp, st: AlmState, x: Array) -> AlmState:
    """Replace the multipliers by their first-order estimate at ``x``.

    Records the constraint violation ``||g(x) - proj_D(g(x) + y/sigma)||_inf``
    measured with the pre-update multipliers.
    """
    y_hat, violation = multiplier_estimate(nlp, st, x)
    vinf = float(np.max(violation)) if violation.size else 0.0
    return AlmState(
        y=y_hat,
        sigma=st.sigma.copy(),
        inner_tol=st.inner_tol,
        outer_iteration=st.outer_iteration,
        violation=vinf,
        violation_vec=violation,
    )


def update_penalty(st: AlmState, prev_violation: float, params: AlmParams) -> AlmState:
    """Penalty growth on stagnating rows and inner-tolerance shrink.

    When the overall violation failed to at least halve, the penalties of
    rows still violated beyond ``constraint_tol`` grow by ``penalty_factor``
    (capped at ``sigma_max``).  The inner tolerance always shrinks by
    ``inner_tol_factor``, floored at ``final_tol``.
    """
    sigma = st.sigma.copy()
    if st.violation > 0.5 * prev_violation and st.violation_vec is not None:
        rows = st.violation_vec > params.constraint_tol
        sigma[rows] = np.minimum(sigma[rows] * params.penalty_factor, params.sigma_max)
    return AlmState(
        y=st.y.copy(),
        sigma=sigma,
        inner_tol=max(st.inner_tol / params.inner_tol_factor, params.final_tol),
        outer_iteration=st.outer_iteration,
        violation=st.violation,
        violation_vec=None if st.violation_vec is None else st.violation_vec.copy(),
    )


def _accumulate(stats: AlmStats, istats: PantrStats) -> None:
    stats.inner_iterations += istats.iterations
    stats.cg_iterations += istats.total_cg_iterations
    stats.tr_solves += istats.tr_solves
    stats.gamma_halvings += istats.gamma_halvings
    stats.gradient_evaluations += istats.gradient_evaluations
    stats.hvp_evaluations += istats.hvp_evaluations


def _solve_inner(
    problem: CompositeProblem,
    x: Array,
    tol: float,
    max_iters: int,
    solver: str,
) -> tuple[Array, PantrStats]:
    if solver == "fbs":
        return fbs_solve(problem, x, tol=tol, max_iters=max_iters)
    return pantr_solve(problem, x, PantrParams(tol=tol, max_iters=max_iters))


def alm_solve(
    nlp: ConstrainedNlp,
    x0: Array,
    params: Optional[AlmParams] = None,
    callback: Optional[Callable[[int, AlmState, PantrStats], None]] = None,
) -> tuple[Array, Array, AlmStats]:
    """Solve a constrained problem by alternating inner solves and updates.

    Loops inner minimization (warm-started from the previous iterate),
    multiplier update, and penalty/tolerance update until both the inner
    stationarity measure and the constraint violation fall below their
    tolerances.  Without general constraints the problem is handed directly
    to a single inner solve over the variable box.  A penalty that reaches
    its cap on rows whose violation stagnates flags suspected infeasibility.
    """
    if params is None:
        params = AlmParams()
    x = np.array(x0, dtype=float)
    stats = AlmStats()
    m = nlp.n_constraints

    if m == 0:
        problem = CompositeProblem(
            dim=nlp.dim,
            eval_f=nlp.eval_f,
            eval_grad_f=nlp.eval_grad_f,
            eval_hvp=finite_difference_hvp(nlp.eval_grad_f),
            nonsmooth=Box(nlp.variable_box.lb, nlp.variable_box.ub),
        )
        budget = params.max_inner_iters * params.max_outer_iters
        x, istats = _solve_inner(problem, x, params.final_tol, budget, params.inner_solver)
        _accumulate(stats, istats)
        stats.outer_iterations = 1
        stats.final_residual_inf = istats.final_residual_inf
        stats.final_violation = 0.0
        stats.status = {
            SolveStatus.CONVERGED: AlmStatus.CONVERGED,
            SolveStatus.MAX_ITERS: AlmStatus.MAX_OUTER_ITERS,
            SolveStatus.NOT_FINITE: AlmStatus.NOT_FINITE,
        }[istats.status]
        return x, np.zeros(0), stats

    y0 = np.zeros(m) if params.y0 is None else np.asarray(params.y0, dtype=float).copy()
    st = AlmState(y=y0, sigma=np.full(m, params.initial_penalty), inner_tol=params.initial_inner_tol)
    prev_violation = math.inf
    status = AlmStatus.MAX_OUTER_ITERS

    for outer in range(params.max_outer_iters):
        inner = build_inner(nlp, st)
        x, istats = _solve_inner(inner, x, st.inner_tol, params.max_inner_iters, params.inner_solver)
        _accumulate(stats, istats)
        stats.outer_iterations = outer + 1
        stats.final_residual_inf = istats.final_residual_inf
        if istats.status == SolveStatus.NOT_FINITE:
            status = AlmStatus.NOT_FINITE
            st = update_multipliers(nlp, st, x)
            break

        st = update_multipliers(nlp, st, x)
        st.outer_iteration = outer + 1
        if callback is not None:
            callback(outer, st, istats)

        if (
            istats.final_residual_inf <= params.final_tol
            and st.violation <= params.constraint_tol
        ):
            status = AlmStatus.CONVERGED
            break

        stagnant = st.violation > 0.5 * prev_violation
        rows = st.violation_vec > params.constraint_tol
        if stagnant and np.any(rows) and np.all(st.sigma[rows] >= params.sigma_max):
            status = AlmStatus.INFEASIBLE_SUSPECTED
            break
        st = update_penalty(st, prev_violation, params)
        prev_violation = st.violation

    stats.final_violation = st.violation
    stats.status = status
    return x, st.y, stats
