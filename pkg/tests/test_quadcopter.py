"""Tests for the quadcopter dynamics, shooting, and adjoint machinery."""

import math

import numpy as np
import pytest

from pantr import AlmParams, AlmStatus, alm_solve
from pantr.quadcopter import (
    GRAVITY,
    OcpSpec,
    QuadcopterModel,
    _rk4,
    dynamics,
    dynamics_jacobians,
    ocp_as_nlp,
    rk4_step,
    rk4_vjp,
    rollout,
    rotation_matrix,
    shoot,
    shoot_adjoint,
    stage_cost,
    state_constraint,
    state_constraint_vjp,
    terminal_cost,
)

HOVER = np.array([GRAVITY, 0.0, 0.0, 0.0])


def hover_state(p=(0.0, 0.0, 0.0)):
    x = np.zeros(9)
    x[0:3] = p
    return x


class TestRotation:
    def test_identity_at_zero(self):
        np.testing.assert_allclose(rotation_matrix(np.zeros(3)), np.eye(3), atol=1e-15)

    def test_orthogonality(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            R = rotation_matrix(rng.uniform(-np.pi, np.pi, 3))
            np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
            assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)

    def test_dynamics_uses_third_column(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(9)
        at = 7.3
        xdot = dynamics(x, np.array([at, 0.1, -0.2, 0.05]))
        expected = at * rotation_matrix(x[6:9])[:, 2] + np.array([0, 0, -GRAVITY])
        np.testing.assert_allclose(xdot[3:6], expected, atol=1e-14)


class TestRk4:
    def test_hover_is_equilibrium(self):
        model = QuadcopterModel()
        x = hover_state((0.25, 0.25, 0.5))
        np.testing.assert_allclose(rk4_step(model, x, HOVER), x, atol=1e-12)

    def test_free_fall_is_exact(self):
        model = QuadcopterModel()
        x = hover_state()
        xp = rk4_step(model, x, np.zeros(4))
        assert xp[2] == pytest.approx(-0.5 * GRAVITY * model.ts**2, rel=1e-14)
        assert xp[5] == pytest.approx(-GRAVITY * model.ts, rel=1e-14)
        np.testing.assert_allclose(xp[[0, 1, 3, 4, 6, 7, 8]], 0.0, atol=1e-15)

    def test_zero_dynamics_stub_is_identity(self):
        x = np.arange(9.0)
        out = _rk4(lambda s, u: np.zeros(9), x, np.zeros(4), 0.1)
        np.testing.assert_array_equal(out, x)

    def test_jacobians_match_finite_differences(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            x = rng.standard_normal(9)
            u = rng.standard_normal(4) + np.array([9.0, 0, 0, 0])
            A, B = dynamics_jacobians(x, u)
            h = 1e-7
            for i in range(9):
                e = np.zeros(9)
                e[i] = h
                fd = (dynamics(x + e, u) - dynamics(x - e, u)) / (2 * h)
                np.testing.assert_allclose(A[:, i], fd, atol=1e-6)
            for i in range(4):
                e = np.zeros(4)
                e[i] = h
                fd = (dynamics(x, u + e) - dynamics(x, u - e)) / (2 * h)
                np.testing.assert_allclose(B[:, i], fd, atol=1e-6)


class TestShoot:
    def test_hover_at_reference_costs_only_thrust(self):
        spec = OcpSpec(horizon=1)
        x0 = hover_state((0.25, 0.25, 0.5))
        cost, states = shoot(spec, x0, HOVER)
        assert cost == pytest.approx(1e-4 * GRAVITY**2, rel=1e-12)
        np.testing.assert_allclose(states[1], x0, atol=1e-12)

    def test_zero_state_zero_input_hand_value(self):
        spec = OcpSpec(horizon=1)
        cost, states = shoot(spec, np.zeros(9), np.zeros(4))
        # free fall for one step: p_z = -g T^2/2, v_z = -g T
        pz = -0.5 * GRAVITY * 0.1**2
        vz = -GRAVITY * 0.1
        stage = 10.0 * (0.25**2 + 0.25**2 + 0.5**2)
        term = 10.0 * (0.25**2 + 0.25**2 + (pz - 0.5) ** 2) + vz**2
        assert cost == pytest.approx(stage + term, rel=1e-12)

    def test_stage_additivity_at_hover(self):
        spec1 = OcpSpec(horizon=1)
        spec2 = OcpSpec(horizon=2)
        x0 = hover_state((0.1, -0.2, 0.3))
        c1, _ = shoot(spec1, x0, HOVER)
        c2, _ = shoot(spec2, x0, np.tile(HOVER, 2))
        stage = stage_cost(spec1, x0, HOVER)
        assert c2 == pytest.approx(c1 + stage, rel=1e-12)
        assert c1 == pytest.approx(stage + terminal_cost(spec1, x0), rel=1e-12)

    def test_blowup_raises(self):
        from pantr import EvaluationError

        spec = OcpSpec(horizon=3)
        with pytest.raises(EvaluationError):
            rollout(spec, np.zeros(9), np.full(12, 1e308))


class TestAdjoint:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        for horizon in (1, 3, 8):
            spec = OcpSpec(horizon=horizon)
            for _ in range(7):
                x0 = rng.standard_normal(9) * 0.4
                u = rng.standard_normal(4 * horizon) * 0.5 + np.tile(HOVER, horizon)
                grad = shoot_adjoint(spec, x0, u)
                h = 1e-6
                fd = np.zeros_like(u)
                for i in range(u.size):
                    up, um = u.copy(), u.copy()
                    up[i] += h
                    um[i] -= h
                    fd[i] = (shoot(spec, x0, up)[0] - shoot(spec, x0, um)[0]) / (2 * h)
                np.testing.assert_allclose(grad, fd, rtol=1e-5, atol=1e-7)

    def test_matches_dense_jacobian_chain(self):
        # independent oracle: finite-difference step Jacobians chained densely
        rng = np.random.default_rng(4)
        spec = OcpSpec(horizon=4)
        model = spec.model
        x0 = rng.standard_normal(9) * 0.3
        u = rng.standard_normal(16) * 0.4 + np.tile(HOVER, 4)
        uk = u.reshape(4, 4)
        states = rollout(spec, x0, u)

        def step_jacobians(x, v):
            h = 1e-7
            Jx = np.zeros((9, 9))
            Ju = np.zeros((9, 4))
            for i in range(9):
                e = np.zeros(9)
                e[i] = h
                Jx[:, i] = (rk4_step(model, x + e, v) - rk4_step(model, x - e, v)) / (2 * h)
            for i in range(4):
                e = np.zeros(4)
                e[i] = h
                Ju[:, i] = (rk4_step(model, x, v + e) - rk4_step(model, x, v - e)) / (2 * h)
            return Jx, Ju

        from pantr.quadcopter import stage_cost_grads, terminal_cost_grad

        lam = terminal_cost_grad(spec, states[4])
        expected = np.zeros((4, 4))
        for k in range(3, -1, -1):
            Jx, Ju = step_jacobians(states[k], uk[k])
            gx, gu = stage_cost_grads(spec, states[k], uk[k])
            expected[k] = Ju.T @ lam + gu
            lam = Jx.T @ lam + gx
        np.testing.assert_allclose(shoot_adjoint(spec, x0, u).reshape(4, 4), expected, rtol=1e-5, atol=1e-6)

    def test_vjp_transposes_step_jacobian(self):
        rng = np.random.default_rng(5)
        model = QuadcopterModel()
        x = rng.standard_normal(9) * 0.2
        u = np.array([8.5, 0.05, -0.03, 0.08])
        lam = rng.standard_normal(9)
        lam_prev, grad_u = rk4_vjp(model, x, u, lam)
        h = 1e-7
        fx = np.zeros(9)
        for i in range(9):
            e = np.zeros(9)
            e[i] = h
            fx[i] = float((rk4_step(model, x + e, u) - rk4_step(model, x - e, u)) @ lam) / (2 * h)
        fu = np.zeros(4)
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            fu[i] = float((rk4_step(model, x, u + e) - rk4_step(model, x, u - e)) @ lam) / (2 * h)
        np.testing.assert_allclose(lam_prev, fx, rtol=1e-6, atol=1e-7)
        np.testing.assert_allclose(grad_u, fu, rtol=1e-6, atol=1e-7)

    def test_gradient_vanishes_at_interior_minimizer(self):
        spec = OcpSpec(horizon=2)
        nlp = ocp_as_nlp(spec, hover_state((0.2, 0.2, 0.45)), state_constraints=False)
        x, _, stats = alm_solve(nlp, np.tile(HOVER, 2), AlmParams(final_tol=1e-10))
        assert stats.status == AlmStatus.CONVERGED
        assert np.all(x > nlp.variable_box.lb + 1e-6)
        assert np.all(x < nlp.variable_box.ub - 1e-6)
        assert np.linalg.norm(nlp.eval_grad_f(x), ord=np.inf) <= 1e-6


class TestConstraints:
    def test_values_and_vjp(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            x = rng.standard_normal(9)
            c = state_constraint(x)
            assert c[0] == x[6] and c[1] == x[7]
            assert c[2] == pytest.approx(math.cos(x[6]) * math.cos(x[7]))
            assert c[3] == pytest.approx(x[0] ** 2 + x[1] ** 2)
            w = rng.standard_normal(4)
            h = 1e-7
            fd = np.zeros(9)
            for i in range(9):
                e = np.zeros(9)
                e[i] = h
                fd[i] = float((state_constraint(x + e) - state_constraint(x - e)) @ w) / (2 * h)
            np.testing.assert_allclose(state_constraint_vjp(x, w), fd, rtol=1e-6, atol=1e-8)

    def test_nlp_dimensions(self):
        nlp = ocp_as_nlp(OcpSpec(horizon=1), np.zeros(9))
        assert nlp.dim == 4
        assert nlp.n_constraints == 4
        nlp12 = ocp_as_nlp(OcpSpec(horizon=12), np.zeros(9))
        assert nlp12.dim == 48 and nlp12.n_constraints == 48

    def test_cylinder_violated_when_hovering_over_origin(self):
        spec = OcpSpec(horizon=1)
        nlp = ocp_as_nlp(spec, np.zeros(9))
        g = nlp.eval_g(HOVER)
        assert g[3] < 0.01  # p_x^2 + p_y^2 below the required clearance

    def test_interior_start_converges_with_zero_multipliers(self):
        # disable the cylinder row; hovering at the reference leaves every
        # remaining constraint strictly inactive
        spec = OcpSpec(horizon=2)
        z_lb = spec.z_lb.copy()
        z_lb[3] = -np.inf
        spec = OcpSpec(horizon=2, z_lb=z_lb)
        nlp = ocp_as_nlp(spec, hover_state((0.25, 0.25, 0.5)))
        x, y, stats = alm_solve(nlp, np.tile(HOVER, 2), AlmParams())
        assert stats.status == AlmStatus.CONVERGED
        np.testing.assert_allclose(y, np.zeros(8), atol=1e-12)

    def test_fused_lagrangian_gradient_matches_split_path(self):
        import dataclasses

        from pantr.alm import AlmState, build_inner

        rng = np.random.default_rng(8)
        spec = OcpSpec(horizon=5)
        nlp = ocp_as_nlp(spec, rng.standard_normal(9) * 0.2)
        assert nlp.eval_grad_lagrangian is not None
        st = AlmState(
            y=rng.standard_normal(20), sigma=rng.uniform(1e2, 1e4, 20), inner_tol=1.0
        )
        fused = build_inner(nlp, st)
        split = build_inner(dataclasses.replace(nlp, eval_grad_lagrangian=None), st)
        for _ in range(10):
            u = rng.standard_normal(20) * 0.3 + np.tile(HOVER, 5)
            a, b = fused.eval_grad_f(u), split.eval_grad_f(u)
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_jvp_t_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        spec = OcpSpec(horizon=3)
        nlp = ocp_as_nlp(spec, rng.standard_normal(9) * 0.2)
        u = rng.standard_normal(12) * 0.3 + np.tile(HOVER, 3)
        w = rng.standard_normal(12)
        jt = nlp.eval_g_jvp_t(u, w)
        h = 1e-6
        fd = np.zeros(12)
        for i in range(12):
            up, um = u.copy(), u.copy()
            up[i] += h
            um[i] -= h
            fd[i] = float((nlp.eval_g(up) - nlp.eval_g(um)) @ w) / (2 * h)
        np.testing.assert_allclose(jt, fd, rtol=1e-5, atol=1e-7)
