"""Proximal trust-region solver with an augmented Lagrangian outer loop."""

from .alm import (
    AlmParams,
    AlmState,
    AlmStats,
    AlmStatus,
    ConstrainedNlp,
    alm_solve,
    build_inner,
    finite_difference_hvp,
    update_multipliers,
    update_penalty,
)
from .core import (
    ActiveSet,
    Box,
    CompositeProblem,
    EvaluationError,
    FbPoint,
    L1,
    NonsmoothTerm,
    Zero,
    active_set,
    dist_sq_sigma,
    fb_step,
    fbe_at,
    nonsmooth_value,
    prox,
)
from .solver import (
    PantrParams,
    PantrStats,
    SolveStatus,
    acceptance_ratio,
    candidate_step,
    check_gamma,
    fbs_solve,
    pantr_solve,
    projected_gradient_residual,
    update_radius,
)
from .trust_region import (
    TrProblem,
    TrResult,
    TrStatus,
    default_cg_tol,
    steihaug_cg,
    tr_exact_oracle,
)

__all__ = [
    "ActiveSet",
    "AlmParams",
    "AlmState",
    "AlmStats",
    "AlmStatus",
    "Box",
    "CompositeProblem",
    "ConstrainedNlp",
    "EvaluationError",
    "FbPoint",
    "L1",
    "NonsmoothTerm",
    "PantrParams",
    "PantrStats",
    "SolveStatus",
    "TrProblem",
    "TrResult",
    "TrStatus",
    "Zero",
    "acceptance_ratio",
    "active_set",
    "alm_solve",
    "build_inner",
    "candidate_step",
    "check_gamma",
    "default_cg_tol",
    "dist_sq_sigma",
    "fb_step",
    "fbe_at",
    "fbs_solve",
    "finite_difference_hvp",
    "nonsmooth_value",
    "pantr_solve",
    "projected_gradient_residual",
    "prox",
    "steihaug_cg",
    "tr_exact_oracle",
    "update_multipliers",
    "update_penalty",
    "update_radius",
]

__version__ = "0.1.0"
