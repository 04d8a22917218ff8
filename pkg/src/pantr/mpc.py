"""Closed-loop MPC simulation of the quadcopter benchmark.

Each simulated step solves the finite-horizon problem from the current plant
state, applies the first input, and advances the plant with the same
integrator.  Warm starts shift the previous solution and multipliers by one
block (repeating the last); cold starts use zero inputs clamped into the box
and zero multipliers.  Per-step statistics are collected into records and can
be written as CSV with a fixed column order.

The pipeline has no stochastic components, so runs are reproducible; the
``seed`` argument is recorded on each run's records for provenance.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alm import AlmParams, AlmStatus, alm_solve
from .core import EvaluationError
from .quadcopter import OcpSpec, ocp_as_nlp, rk4_step

Array = np.ndarray

CSV_COLUMNS = [
    "solver",
    "horizon",
    "step",
    "warm",
    "wall_ns",
    "inner_iters",
    "outer_iters",
    "cg_iters",
    "gamma_halvings",
    "residual",
    "violation",
    "cost",
    "px",
    "py",
    "pz",
]

# Start just outside the forbidden cylinder, with the straight path to the
# reference blocked by it, so the avoidance constraint is active early on.
DEFAULT_X0 = np.array([-0.1, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])


@dataclass
class MpcRunRecord:
    """Statistics for one simulated MPC step."""

    solver: str
    horizon: int
    step: int
    warm: bool
    wall_ns: int
    inner_iters: int
    outer_iters: int
    cg_iters: int
    tr_solves: int
    gamma_halvings: int
    residual: float
    violation: float
    cost: float
    state: Array
    applied_input: Array
    converged: bool
    seed: int

    def csv_row(self) -> list:
        return [
            self.solver,
            self.horizon,
            self.step,
            "true" if self.warm else "false",
            self.wall_ns,
            self.inner_iters,
            self.outer_iters,
            self.cg_iters,
            self.gamma_halvings,
            self.residual,
            self.violation,
            self.cost,
            self.state[0],
            self.state[1],
            self.state[2],
        ]


def mpc_simulate(
    spec: OcpSpec,
    solver: str = "pantr",
    steps: int = 60,
    warm: bool = True,
    seed: int = 0,
    x0: Optional[Array] = None,
    tol: float = 1e-8,
    state_constraints: bool = True,
    max_outer_iters: int = 50,
) -> list[MpcRunRecord]:
    """Run the closed loop for ``steps`` samples and return one record each.

    A hard evaluation failure in the solver is recorded as a non-converged
    step and the previously applied input is held; non-converged solves still
    apply their best iterate's first input.
    """
    if not 1 <= spec.horizon <= 60:
        raise ValueError("horizon must lie in [1, 60]")
    n = 4 * spec.horizon
    m = 4 * spec.horizon if state_constraints else 0
    state = DEFAULT_X0.copy() if x0 is None else np.asarray(x0, dtype=float).copy()
    cold_guess = np.clip(np.zeros(n), np.tile(spec.u_lb, spec.horizon), np.tile(spec.u_ub, spec.horizon))
    u_sol = cold_guess.copy()
    y_sol = np.zeros(m)
    u_applied = cold_guess[:4].copy()
    records: list[MpcRunRecord] = []

    for step in range(steps):
        nlp = ocp_as_nlp(spec, state, state_constraints=state_constraints)
        if warm and step > 0:
            u_guess = np.concatenate([u_sol[4:], u_sol[-4:]])
            y_guess = np.concatenate([y_sol[4:], y_sol[-4:]]) if m else y_sol
        else:
            u_guess = cold_guess.copy()
            y_guess = np.zeros(m)
        params = AlmParams(
            final_tol=tol,
            constraint_tol=tol,
            inner_solver=solver,
            y0=y_guess,
            max_outer_iters=max_outer_iters,
        )
        t0 = time.perf_counter_ns()
        try:
            x_sol, y_out, astats = alm_solve(nlp, u_guess, params)
            failed = False
        except EvaluationError:
            failed = True
        wall = time.perf_counter_ns() - t0

        if not failed:
            u_sol = np.asarray(x_sol, dtype=float)
            y_sol = np.asarray(y_out, dtype=float)
            u_applied = u_sol[:4].copy()
        state = rk4_step(spec.model, state, u_applied)
        if failed:
            record = MpcRunRecord(
                solver=solver,
                horizon=spec.horizon,
                step=step,
                warm=warm,
                wall_ns=wall,
                inner_iters=0,
                outer_iters=0,
                cg_iters=0,
                tr_solves=0,
                gamma_halvings=0,
                residual=math.inf,
                violation=math.inf,
                cost=math.nan,
                state=state.copy(),
                applied_input=u_applied.copy(),
                converged=False,
                seed=seed,
            )
        else:
            record = MpcRunRecord(
                solver=solver,
                horizon=spec.horizon,
                step=step,
                warm=warm,
                wall_ns=wall,
                inner_iters=astats.inner_iterations,
                outer_iters=astats.outer_iterations,
                cg_iters=astats.cg_iterations,
                tr_solves=astats.tr_solves,
                gamma_halvings=astats.gamma_halvings,
                residual=astats.final_residual_inf,
                violation=astats.final_violation,
                cost=float(nlp.eval_f(u_sol)),
                state=state.copy(),
                applied_input=u_applied.copy(),
                converged=astats.status == AlmStatus.CONVERGED,
                seed=seed,
            )
        records.append(record)
    return records


def write_csv(records: list[MpcRunRecord], path: str) -> None:
    """Write records in the fixed benchmark CSV schema (UTF-8, header row)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for record in records:
            writer.writerow(record.csv_row())
