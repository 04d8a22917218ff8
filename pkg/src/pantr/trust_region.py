"""Trust-region subproblem solvers.

``steihaug_cg`` is the production solver: a matrix-free truncated conjugate
gradient that needs only Hessian-vector products and stops at the ball
boundary or on negative curvature.  ``tr_exact_oracle`` is a dense
eigendecomposition-based global solver used as an independent test oracle at
small sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .core import EvaluationError

Array = np.ndarray


class TrStatus(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    NEGATIVE_CURVATURE = "negative_curvature"
    MAX_ITERS = "max_iters"


@dataclass
class TrProblem:
    """Reduced trust-region subproblem ``min 0.5 <d, H d> + <g, d>, ||d|| <= radius``.

    ``hvp_reduced`` applies the reduced Hessian block, ``grad_reduced`` is the
    linear term, ``cg_tol`` the relative residual tolerance for interior
    termination, and ``max_cg_iters`` the iteration cap.
    """

    hvp_reduced: Callable[[Array], Array]
    grad_reduced: Array
    radius: float
    cg_tol: float
    max_cg_iters: int

    def __post_init__(self):
        self.grad_reduced = np.asarray(self.grad_reduced, dtype=float)
        if not self.radius > 0:
            raise ValueError("trust-region radius must be positive")
        if not np.all(np.isfinite(self.grad_reduced)):
            raise ValueError("reduced gradient must be finite")


@dataclass
class TrResult:
    d_J: Array
    status: TrStatus
    model_value: float
    cg_iterations: int


def default_cg_tol(grad_norm: float) -> float:
    """Forcing-sequence relative tolerance ``min(0.1, sqrt(||g||))``.

    Tightens near solutions so Newton-like steps stay superlinearly accurate
    while early iterations terminate cheaply.
    """
    return min(0.1, math.sqrt(grad_norm))


def _boundary_tau(d: Array, p: Array, radius: float) -> float:
    # Positive root of ||d + tau p|| = radius, in a cancellation-free form.
    a = float(p @ p)
    b = 2.0 * float(d @ p)
    c = float(d @ d) - radius * radius
    disc = max(b * b - 4.0 * a * c, 0.0)
    sq = math.sqrt(disc)
    if b <= 0.0:
        return (-b + sq) / (2.0 * a)
    return -2.0 * c / (b + sq)


def steihaug_cg(tp: TrProblem) -> TrResult:
    """Truncated conjugate gradient for the trust-region subproblem.

    Starts from ``d = 0``.  A step crossing the ball is cut at the boundary;
    a direction of nonpositive curvature is followed to the boundary; interior
    termination triggers once the CG residual drops below
    ``cg_tol * ||grad_reduced||``.  The returned model value is the exact
    quadratic at the returned point (tracked via the accumulated product
    ``H d``, so no extra Hessian-vector products are spent), and it never
    exceeds the Cauchy-point value.
    """
    g = tp.grad_reduced
    gnorm = float(np.linalg.norm(g))
    d = np.zeros_like(g)
    if gnorm == 0.0 or tp.max_cg_iters < 1:
        status = TrStatus.INTERIOR if gnorm == 0.0 else TrStatus.MAX_ITERS
        return TrResult(d, status, 0.0, 0)

    threshold = tp.cg_tol * gnorm
    hd = np.zeros_like(g)
    r = g.copy()
    p = -g
    rr = gnorm * gnorm
    model = 0.0
    for k in range(tp.max_cg_iters):
        hp = np.asarray(tp.hvp_reduced(p), dtype=float)
        if not np.all(np.isfinite(hp)):
            raise EvaluationError("Hessian-vector product is not finite", p)
        php = float(p @ hp)
        if php <= 0.0:
            tau = _boundary_tau(d, p, tp.radius)
            d = d + tau * p
            hd = hd + tau * hp
            return TrResult(d, TrStatus.NEGATIVE_CURVATURE, _model(g, d, hd), k + 1)
        alpha = rr / php
        d_next = d + alpha * p
        if float(np.linalg.norm(d_next)) >= tp.radius:
            tau = _boundary_tau(d, p, tp.radius)
            d = d + tau * p
            hd = hd + tau * hp
            return TrResult(d, TrStatus.BOUNDARY, _model(g, d, hd), k + 1)
        d = d_next
        hd = hd + alpha * hp
        model_next = model - 0.5 * alpha * rr
        assert model_next <= model + 1e-12 * max(1.0, abs(model)), "CG model must decrease"
        model = model_next
        r = r + alpha * hp
        rr_next = float(r @ r)
        if math.sqrt(rr_next) <= threshold:
            return TrResult(d, TrStatus.INTERIOR, _model(g, d, hd), k + 1)
        p = -r + (rr_next / rr) * p
        rr = rr_next
    return TrResult(d, TrStatus.MAX_ITERS, _model(g, d, hd), tp.max_cg_iters)


def _model(g: Array, d: Array, hd: Array) -> float:
    # Exact quadratic model; clamp roundoff noise so the value stays <= 0.
    val = float(g @ d) + 0.5 * float(d @ hd)
    return min(val, 0.0)


def tr_exact_oracle(H: Array, g: Array, radius: float) -> tuple[Array, float]:
    """Global trust-region minimizer of ``0.5 <d, H d> + <g, d>`` on ``||d|| <= radius``.

    Dense eigendecomposition plus bisection on the secular equation for the
    multiplier ``lam >= max(0, -lam_min(H))``, including the hard case where
    the gradient is orthogonal to the bottom eigenspace.  Returns the
    minimizer and the multiplier, which together satisfy
    ``(H + lam I) d = -g`` with ``H + lam I`` positive semidefinite and
    ``lam * (radius - ||d||) = 0``.  Test-scale only (dimension <= 50).
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    k = g.size
    if k > 50:
        raise ValueError("exact oracle is restricted to dimension <= 50")
    if not radius > 0:
        raise ValueError("radius must be positive")

    w, V = np.linalg.eigh(0.5 * (H + H.T))
    gb = V.T @ g
    scale = max(1.0, float(np.max(np.abs(w))), float(np.linalg.norm(g)))
    tiny = 1e-13 * scale

    def solution(lam: float) -> Array:
        return V @ (-gb / (w + lam))

    # Unconstrained minimizer, when it exists inside the ball.
    if w[0] > tiny:
        d = solution(0.0)
        if float(np.linalg.norm(d)) <= radius:
            return d, 0.0

    lam_lo = max(0.0, -float(w[0]))
    deficient = (w + lam_lo) <= tiny
    if np.all(np.abs(gb[deficient]) <= tiny):
        # Pseudo-solution at the smallest admissible multiplier.
        coef = np.zeros_like(gb)
        free = ~deficient
        coef[free] = -gb[free] / (w[free] + lam_lo)
        d0 = V @ coef
        s0 = float(np.linalg.norm(d0))
        if s0 <= radius:
            if lam_lo == 0.0:
                return d0, 0.0
            # Hard case: pad along a bottom eigenvector to reach the boundary.
            tau = math.sqrt(max(radius * radius - s0 * s0, 0.0))
            return d0 + tau * V[:, int(np.argmax(deficient))], lam_lo

    # Secular equation ||d(lam)|| = radius is strictly decreasing on (lam_lo, inf).
    lam_hi = lam_lo + float(np.linalg.norm(gb)) / radius + tiny
    while float(np.linalg.norm(solution(lam_hi))) > radius:
        lam_hi = 2.0 * lam_hi + 1.0
    lo, hi = lam_lo, lam_hi
    lam = hi
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        s = float(np.linalg.norm(solution(lam)))
        if abs(s - radius) <= 1e-13 * max(1.0, radius):
            return solution(lam), lam
        if s > radius:
            lo = lam
        else:
            hi = lam
    d = solution(hi)
    if abs(float(np.linalg.norm(d)) - radius) > 1e-9 * max(1.0, radius):
        raise RuntimeError("secular-equation bisection failed to converge")
    return d, hi
