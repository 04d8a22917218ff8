"""Composite problems, proximal operators, and forward-backward machinery.

A composite problem is the sum of a smooth term (value / gradient /
Hessian-vector product callbacks) and a simple nonsmooth term whose proximal
operator has a closed form.  This module provides the nonsmooth term variants
(box indicator, scaled l1-norm, zero), the forward-backward step and its
fixed-point residual, the forward-backward envelope, active-set
identification at box or l1 "kinks", and the diagonally weighted squared
distance used by the augmented Lagrangian layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

Array = np.ndarray


class EvaluationError(RuntimeError):
    """A problem callback produced non-finite values.

    The offending point is attached so callers can report it or treat the
    evaluation as infinitely bad (e.g. reject a trial step).
    """

    def __init__(self, message: str, point: Optional[Array] = None):
        super().__init__(message)
        self.point = None if point is None else np.array(point, dtype=float)


@dataclass(frozen=True)
class Box:
    """Indicator of the rectangle ``[lb, ub]``; infinite entries disable a side."""

    lb: Array
    ub: Array

    def __post_init__(self):
        lb = np.atleast_1d(np.asarray(self.lb, dtype=float))
        ub = np.atleast_1d(np.asarray(self.ub, dtype=float))
        if lb.shape != ub.shape:
            raise ValueError("box bounds must have matching shapes")
        if np.any(lb > ub):
            raise ValueError("box requires lb <= ub componentwise")
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)


@dataclass(frozen=True)
class L1:
    """Scaled l1-norm ``lam * ||x||_1`` with ``lam > 0``."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("l1 weight must be positive")


@dataclass(frozen=True)
class Zero:
    """Identically zero nonsmooth term."""


NonsmoothTerm = Union[Box, L1, Zero]


@dataclass
class CompositeProblem:
    """Evaluation contract for minimizing ``f(x) + g(x)``.

    Parameters
    ----------
    dim : int
        Number of decision variables.
    eval_f : callable
        ``x -> float``, the smooth term.
    eval_grad_f : callable
        ``x -> ndarray``, gradient of the smooth term.
    eval_hvp : callable
        ``(x, v) -> ndarray``, product of (an element of) the generalized
        Hessian of the smooth term with ``v``.  May be exact or a
        finite-difference approximation.
    nonsmooth : Box | L1 | Zero
        The nonsmooth term ``g``.

    All callbacks must be re-entrant and free of shared mutable state so that
    independent solver instances can run concurrently.
    """

    dim: int
    eval_f: Callable[[Array], float]
    eval_grad_f: Callable[[Array], Array]
    eval_hvp: Callable[[Array, Array], Array]
    nonsmooth: NonsmoothTerm

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("problem dimension must be positive")


@dataclass
class FbPoint:
    """Forward-backward step data at a base point.

    ``x_hat`` is the proximal-gradient point, ``residual`` the fixed-point
    residual ``(x - x_hat) / gamma``, and ``fbe`` the forward-backward
    envelope value at ``x``.  ``f_x`` and ``grad_x`` cache the smooth term's
    value and gradient at ``x`` so each solver iteration pays exactly one
    function and one gradient evaluation per visited point.
    """

    x: Array
    x_hat: Array
    residual: Array
    gamma: float
    f_x: float
    grad_x: Array
    fbe: float


@dataclass
class ActiveSet:
    """Index split induced by the forward point ``x - gamma * grad``.

    ``active`` collects coordinates clamped by the box (or inside the l1
    dead zone), ``inactive`` the rest.  ``lower_active`` / ``upper_active``
    partition ``active`` in the box case and are empty otherwise.  Ties are
    classified active, and a coordinate hitting both bounds of a degenerate
    box goes to ``lower_active``.
    """

    active: Array
    inactive: Array
    lower_active: Array
    upper_active: Array


def prox(nonsmooth: NonsmoothTerm, v: Array, gamma: float) -> Array:
    """Proximal point ``argmin_u g(u) + ||u - v||^2 / (2 gamma)``.

    Componentwise clamp for a box, soft-threshold with threshold
    ``gamma * lam`` for the l1-norm, identity for the zero term.
    """
    if not gamma > 0:
        raise ValueError("prox step size must be positive")
    v = np.asarray(v, dtype=float)
    if isinstance(nonsmooth, Box):
        return np.clip(v, nonsmooth.lb, nonsmooth.ub)
    if isinstance(nonsmooth, L1):
        thresh = gamma * nonsmooth.lam
        return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)
    if isinstance(nonsmooth, Zero):
        return v.copy()
    raise TypeError(f"unsupported nonsmooth term {nonsmooth!r}")


def nonsmooth_value(nonsmooth: NonsmoothTerm, x: Array) -> float:
    """Value of the nonsmooth term, ``inf`` outside a box."""
    x = np.asarray(x, dtype=float)
    if isinstance(nonsmooth, Box):
        inside = np.all(x >= nonsmooth.lb) and np.all(x <= nonsmooth.ub)
        return 0.0 if inside else float("inf")
    if isinstance(nonsmooth, L1):
        return nonsmooth.lam * float(np.sum(np.abs(x)))
    if isinstance(nonsmooth, Zero):
        return 0.0
    raise TypeError(f"unsupported nonsmooth term {nonsmooth!r}")


def fb_step(
    p: CompositeProblem,
    x: Array,
    gamma: float,
    f_x: Optional[float] = None,
    grad_x: Optional[Array] = None,
) -> FbPoint:
    """Forward-backward step ``prox_{gamma g}(x - gamma grad f(x))`` at ``x``.

    ``f_x`` / ``grad_x`` may be supplied when already known to avoid
    re-evaluating the problem callbacks.  Raises :class:`EvaluationError`
    when the smooth term or its gradient is non-finite at ``x``.
    """
    x = np.asarray(x, dtype=float)
    if f_x is None:
        f_x = float(p.eval_f(x))
    if grad_x is None:
        grad_x = np.asarray(p.eval_grad_f(x), dtype=float)
    if not np.isfinite(f_x):
        raise EvaluationError("smooth term is not finite", x)
    if not np.all(np.isfinite(grad_x)):
        raise EvaluationError("gradient is not finite", x)
    x_hat = prox(p.nonsmooth, x - gamma * grad_x, gamma)
    residual = (x - x_hat) / gamma
    fb = FbPoint(x, x_hat, residual, gamma, f_x, grad_x, 0.0)
    fb.fbe = fbe_at(p, fb)
    return fb


def fbe_at(p: CompositeProblem, fb: FbPoint) -> float:
    """Forward-backward envelope at ``fb.x``.

    The envelope's inner minimization is attained at the proximal point, so
    the value reduces to
    ``f(x) + g(x_hat) + <grad f(x), x_hat - x> + ||x_hat - x||^2 / (2 gamma)``
    using only quantities cached on ``fb``.
    """
    diff = fb.x_hat - fb.x
    g_hat = nonsmooth_value(p.nonsmooth, fb.x_hat)
    assert np.isfinite(g_hat), "prox output must have finite nonsmooth value"
    quad = float(diff @ diff) / (2.0 * fb.gamma)
    return fb.f_x + g_hat + float(fb.grad_x @ diff) + quad


def active_set(fb: FbPoint, nonsmooth: NonsmoothTerm) -> ActiveSet:
    """Split coordinates by bound activity after a forward step from ``fb.x``.

    A box coordinate is active when the forward point ``x - gamma * grad``
    lands at or beyond a bound (non-strict comparisons, so exact hits count
    as active); an l1 coordinate is active when the forward point sits inside
    the dead zone ``|w| <= gamma * lam``.  The zero term has no kinks, so
    every coordinate is inactive.
    """
    w = fb.x - fb.gamma * fb.grad_x
    idx = np.arange(w.size)
    if isinstance(nonsmooth, Box):
        lower = w <= nonsmooth.lb
        upper = (w >= nonsmooth.ub) & ~lower
        act = lower | upper
        return ActiveSet(idx[act], idx[~act], idx[lower], idx[upper])
    if isinstance(nonsmooth, L1):
        act = np.abs(w) <= fb.gamma * nonsmooth.lam
        empty = idx[:0]
        return ActiveSet(idx[act], idx[~act], empty, empty)
    if isinstance(nonsmooth, Zero):
        empty = idx[:0]
        return ActiveSet(empty, idx, empty, empty)
    raise TypeError(f"unsupported nonsmooth term {nonsmooth!r}")


def dist_sq_sigma(z: Array, box: Box, sigma: Array) -> tuple[float, Array]:
    """Half squared distance of ``z`` to a box in the diagonal metric ``sigma``.

    Returns the value ``0.5 * ||z - proj(z)||^2_sigma`` together with its
    gradient ``sigma * (z - proj(z))`` with respect to ``z``.
    """
    z = np.asarray(z, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    proj = np.clip(z, box.lb, box.ub)
    r = z - proj
    grad = sigma * r
    return 0.5 * float(r @ grad), grad
