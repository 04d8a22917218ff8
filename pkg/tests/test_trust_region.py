"""Tests for the Steihaug CG solver and the dense trust-region oracle."""

import numpy as np
import pytest

from pantr import TrProblem, TrStatus, default_cg_tol, steihaug_cg, tr_exact_oracle
from problems import random_symmetric


def model_value(H, g, d):
    return float(g @ d) + 0.5 * float(d @ H @ d)


def solve_dense(H, g, radius, cg_tol=1e-12, max_iters=None):
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    if max_iters is None:
        max_iters = 10 * g.size
    return steihaug_cg(TrProblem(lambda v: H @ v, g, radius, cg_tol, max_iters))


def certificate(H, g, d, lam, radius):
    k = g.size
    assert np.linalg.norm((H + lam * np.eye(k)) @ d + g) <= 1e-8
    assert lam * (radius - np.linalg.norm(d)) <= 1e-8
    assert np.linalg.eigvalsh(H + lam * np.eye(k)).min() >= -1e-8
    assert np.linalg.norm(d) <= radius * (1 + 1e-12)


class TestExactOracle:
    def test_interior_newton_point(self):
        H = np.diag([2.0, 5.0])
        g = np.array([1.0, -1.0])
        d, lam = tr_exact_oracle(H, g, 10.0)
        assert lam == 0.0
        np.testing.assert_allclose(d, -np.linalg.solve(H, g), atol=1e-12)

    def test_hard_case_indefinite(self):
        # gradient orthogonal to the bottom eigenspace
        H = np.diag([1.0, -1.0])
        g = np.array([1.0, 0.0])
        d, lam = tr_exact_oracle(H, g, 1.0)
        assert lam >= 1.0 - 1e-12
        assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-10)
        assert d[0] == pytest.approx(-0.5, abs=1e-10)
        assert abs(d[1]) == pytest.approx(np.sqrt(3) / 2, abs=1e-10)
        certificate(H, g, d, lam, 1.0)

    def test_huge_radius_matches_linear_solve(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(2, 8))
            A = rng.standard_normal((n, n))
            H = A @ A.T + np.eye(n)
            g = rng.standard_normal(n)
            d, lam = tr_exact_oracle(H, g, 1e12)
            assert lam == 0.0
            np.testing.assert_allclose(d, -np.linalg.solve(H, g), rtol=1e-10, atol=1e-10)

    def test_zero_gradient_indefinite_takes_eigen_step(self):
        H = np.diag([1.0, -2.0])
        d, lam = tr_exact_oracle(H, np.zeros(2), 3.0)
        assert lam == pytest.approx(2.0, abs=1e-12)
        assert np.linalg.norm(d) == pytest.approx(3.0, abs=1e-12)
        certificate(H, np.zeros(2), d, lam, 3.0)

    def test_certificate_on_random_instances(self):
        rng = np.random.default_rng(40)
        for _ in range(200):
            n = int(rng.integers(1, 11))
            H = random_symmetric(rng, n)
            g = rng.standard_normal(n)
            radius = float(rng.uniform(0.1, 5.0))
            d, lam = tr_exact_oracle(H, g, radius)
            certificate(H, g, d, lam, radius)

    def test_rejects_large_dimension(self):
        with pytest.raises(ValueError):
            tr_exact_oracle(np.eye(60), np.ones(60), 1.0)


class TestSteihaug:
    def test_interior_newton_step(self):
        res = solve_dense(np.eye(2), np.array([1.0, 0.0]), 10.0)
        assert res.status == TrStatus.INTERIOR
        np.testing.assert_allclose(res.d_J, [-1.0, 0.0], atol=1e-12)
        assert res.model_value == pytest.approx(-0.5, abs=1e-12)

    def test_boundary_stop(self):
        # Newton step has norm 5 > radius; first CG direction hits the ball
        H, g, radius = np.eye(2), np.array([3.0, 4.0]), 1.0
        res = solve_dense(H, g, radius)
        assert res.status == TrStatus.BOUNDARY
        np.testing.assert_allclose(res.d_J, [-0.6, -0.8], atol=1e-12)
        assert res.model_value == pytest.approx(-4.5, abs=1e-12)
        d_or, _ = tr_exact_oracle(H, g, radius)
        np.testing.assert_allclose(res.d_J, d_or, atol=1e-10)

    def test_negative_curvature_stop(self):
        H, g, radius = -np.eye(2), np.array([1.0, 0.0]), 2.0
        res = solve_dense(H, g, radius)
        assert res.status == TrStatus.NEGATIVE_CURVATURE
        np.testing.assert_allclose(res.d_J, [-2.0, 0.0], atol=1e-12)
        assert res.model_value == pytest.approx(-4.0, abs=1e-12)
        d_or, lam = tr_exact_oracle(H, g, radius)
        assert model_value(H, g, res.d_J) == pytest.approx(model_value(H, g, d_or), abs=1e-10)

    def test_zero_gradient_returns_zero(self):
        res = solve_dense(np.diag([1.0, -1.0]), np.zeros(2), 1.0)
        assert res.status == TrStatus.INTERIOR
        np.testing.assert_array_equal(res.d_J, [0.0, 0.0])
        assert res.cg_iterations == 0

    def test_iteration_cap(self):
        rng = np.random.default_rng(8)
        A = rng.standard_normal((6, 6))
        H = A @ A.T + np.eye(6)
        res = solve_dense(H, rng.standard_normal(6), 1e6, cg_tol=1e-16, max_iters=2)
        assert res.status == TrStatus.MAX_ITERS
        assert res.cg_iterations == 2
        assert res.model_value <= 0.0

    def test_oracle_dominance_and_cauchy(self):
        rng = np.random.default_rng(77)
        for _ in range(500):
            n = int(rng.integers(1, 11))
            H = random_symmetric(rng, n)
            g = rng.standard_normal(n)
            radius = float(rng.uniform(0.1, 4.0))
            res = solve_dense(H, g, radius)
            d_or, lam = tr_exact_oracle(H, g, radius)
            q_st = model_value(H, g, res.d_J)
            q_or = model_value(H, g, d_or)
            assert q_st >= q_or - 1e-9 * max(1.0, abs(q_or))
            # Cauchy point: ball minimizer along the steepest descent ray
            gnorm = np.linalg.norm(g)
            if gnorm > 0:
                gHg = float(g @ H @ g)
                if gHg > 0:
                    t = min(gnorm**2 / gHg, radius / gnorm)
                else:
                    t = radius / gnorm
                q_c = model_value(H, g, -t * g)
                assert q_st <= q_c + 1e-10 * max(1.0, abs(q_c))
            # half the optimal decrease for positive definite blocks
            if np.linalg.eigvalsh(H).min() > 0:
                assert q_st <= 0.5 * q_or + 1e-10
            if res.status == TrStatus.INTERIOR and np.linalg.eigvalsh(H).min() > 0:
                np.testing.assert_allclose(res.d_J, d_or, atol=1e-8, rtol=1e-8)
            assert np.linalg.norm(res.d_J) <= radius * (1 + 1e-12)
            if res.status == TrStatus.INTERIOR:
                assert np.linalg.norm(res.d_J) < radius

    def test_reported_model_value_is_exact(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            H = random_symmetric(rng, n)
            g = rng.standard_normal(n)
            res = solve_dense(H, g, float(rng.uniform(0.2, 3.0)), cg_tol=0.1)
            q = model_value(H, g, res.d_J)
            assert res.model_value == pytest.approx(min(q, 0.0), abs=1e-10)


class TestDefaultTolerance:
    def test_forcing_sequence_shape(self):
        assert default_cg_tol(4.0) == pytest.approx(0.1)
        assert default_cg_tol(1e-4) == pytest.approx(1e-2)
        assert default_cg_tol(0.0) == 0.0
