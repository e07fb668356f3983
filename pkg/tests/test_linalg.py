import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bayeslqr.errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    InstabilityError,
    StabilizabilityError,
)
from bayeslqr.linalg import (
    dare_residual,
    is_psd,
    lyapunov_residual,
    psd_factor,
    sample_matrix_normal,
    solve_dare_cross,
    solve_discrete_lyapunov,
    spectral_radius,
    symmetrize,
)
from conftest import random_stable
from oracles import charpoly_spectral_radius, lyapunov_series, scalar_dare, stationary_cost

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestSpectralRadius:
    def test_identity(self):
        assert spectral_radius(np.eye(2)) == 1.0

    def test_diagonal(self):
        assert spectral_radius(np.diag([0.5, -0.9])) == pytest.approx(0.9, abs=1e-15)

    def test_non_square(self):
        with pytest.raises(DimensionError):
            spectral_radius(np.ones((2, 3)))

    @pytest.mark.parametrize("seed", range(20))
    def test_against_charpoly_oracle(self, seed):
        M = np.random.default_rng(seed).standard_normal((4, 4))
        assert spectral_radius(M) == pytest.approx(charpoly_spectral_radius(M), rel=1e-8)

    @given(arrays(float, (3, 3), elements=finite), st.floats(-5, 5, allow_nan=False))
    def test_homogeneous(self, M, c):
        assert spectral_radius(c * M) == pytest.approx(abs(c) * spectral_radius(M),
                                                       rel=1e-7, abs=1e-9)


class TestIsPsd:
    def test_identity(self):
        assert is_psd(np.eye(3), tol=0.0)

    def test_clearly_negative(self):
        assert not is_psd(np.diag([1.0, -1e-3]), tol=1e-6)

    def test_within_tolerance(self):
        assert is_psd(np.diag([1.0, -1e-9]), tol=1e-6)

    @given(arrays(float, (3, 2), elements=finite))
    def test_gram_matrices(self, F):
        G = F @ F.T
        assert is_psd(G, tol=1e-9 * (1.0 + np.abs(G).max()))


class TestLyapunov:
    def test_zero_dynamics(self):
        np.testing.assert_array_equal(solve_discrete_lyapunov(np.zeros((2, 2)), 0.3 * np.eye(2)),
                                      0.3 * np.eye(2))

    def test_scalar(self):
        assert solve_discrete_lyapunov([[0.5]], [[1.0]])[0, 0] == pytest.approx(4.0 / 3.0, rel=1e-14)

    def test_unstable_raises(self):
        with pytest.raises(InstabilityError):
            solve_discrete_lyapunov(np.diag([1.0, 0.2]), np.eye(2))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            solve_discrete_lyapunov(np.eye(2) * 0.5, np.eye(3))

    @pytest.mark.parametrize("seed", range(10))
    def test_against_series_oracle(self, seed):
        rng = np.random.default_rng(seed)
        Acl = random_stable(3, rng, rho=0.95)
        Sigma = solve_discrete_lyapunov(Acl, np.eye(3))
        ref = lyapunov_series(Acl, np.eye(3))
        assert np.linalg.norm(Sigma - ref) <= 1e-8 * np.linalg.norm(ref)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.floats(0.0, 0.99), st.integers(0, 2**32 - 1))
    def test_residual_and_dominance(self, n, rho, seed):
        rng = np.random.default_rng(seed)
        Acl = random_stable(n, rng, rho=rho) if rho > 0 else np.zeros((n, n))
        F = rng.standard_normal((n, n))
        W = F @ F.T
        Sigma = solve_discrete_lyapunov(Acl, W)
        assert lyapunov_residual(Sigma, Acl, W) <= 1e-10 * (1.0 + np.linalg.norm(Sigma))
        np.testing.assert_array_equal(Sigma, Sigma.T)
        assert is_psd(Sigma - W, tol=1e-9 * (1.0 + np.linalg.norm(Sigma)))


class TestDare:
    def test_zero_dynamics(self):
        P, K = solve_dare_cross([[0.0]], [[1.0]], [[1.0]], [[1.0]])
        assert P[0, 0] == pytest.approx(1.0, abs=1e-14)
        assert K[0, 0] == pytest.approx(0.0, abs=1e-14)

    def test_scalar_quadratic_root(self):
        P, K = solve_dare_cross([[1.0]], [[1.0]], [[1.0]], [[1.0]])
        p, k = scalar_dare(1.0, 1.0, 1.0, 1.0)
        assert P[0, 0] == pytest.approx(p, abs=1e-10)
        assert K[0, 0] == pytest.approx(k, abs=1e-10)
        assert k == pytest.approx(-p / (1 + p))

    @given(st.floats(-1.5, 1.5), st.floats(0.2, 3.0), st.floats(0.01, 10.0), st.floats(0.01, 10.0))
    def test_scalar_family(self, a, b, q, r):
        P, K = solve_dare_cross([[a]], [[b]], [[q]], [[r]])
        p, k = scalar_dare(a, b, q, r)
        assert P[0, 0] == pytest.approx(p, rel=1e-9)
        assert K[0, 0] == pytest.approx(k, rel=1e-8, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_local_optimality_probe(self, seed):
        rng = np.random.default_rng(seed)
        A = random_stable(3, rng, rho=1.05)
        B = rng.standard_normal((3, 1))
        Q, R = np.eye(3), np.array([[0.5]])
        P, K = solve_dare_cross(A, B, Q, R)
        best = stationary_cost(A, B, K, Q, R, 1.0)
        for _ in range(100):
            Kp = K + 1e-3 * rng.standard_normal(K.shape)
            assert stationary_cost(A, B, Kp, Q, R, 1.0) >= best - 1e-10 * best

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 2), st.integers(0, 2**32 - 1))
    def test_fixed_point_and_stability(self, n, m, seed):
        rng = np.random.default_rng(seed)
        A = random_stable(n, rng, rho=rng.uniform(0.1, 1.3))
        B = rng.standard_normal((n, m))
        F = rng.standard_normal((n + m, n + m))
        C = F @ F.T + 0.1 * np.eye(n + m)
        Rt, N, Qt = C[:m, :m], C[:m, m:], C[m:, m:]
        P, K = solve_dare_cross(A, B, Qt, Rt, N)
        assert dare_residual(P, A, B, Qt, Rt, N) <= 1e-8 * (1.0 + np.linalg.norm(P))
        assert spectral_radius(A + B @ K) < 1.0

    def test_cross_term_matches_shifted_problem(self):
        # u'Ru + 2u'Nx + x'Qx with v = u + R^-1 N x is a plain LQR on A - B R^-1 N
        rng = np.random.default_rng(3)
        A, B = random_stable(2, rng, 1.1), rng.standard_normal((2, 1))
        R, N = np.array([[0.7]]), np.array([[0.2, -0.1]])
        Q = np.eye(2) + N.T @ np.linalg.solve(R, N)
        _, K = solve_dare_cross(A, B, Q, R, N)
        F = np.linalg.solve(R, N)
        _, Kv = solve_dare_cross(A - B @ F, B, Q - N.T @ F, R)
        np.testing.assert_allclose(K, Kv - F, atol=1e-9)

    def test_unstabilizable(self):
        with pytest.raises((ConvergenceError, StabilizabilityError)):
            solve_dare_cross(np.diag([1.2, 0.5]), [[0.0], [1.0]], np.eye(2), [[1.0]])

    def test_bad_shapes(self):
        with pytest.raises(DimensionError):
            solve_dare_cross(np.eye(2), np.ones((2, 1)), np.eye(2), np.eye(2))


class TestMatrixNormal:
    def test_zero_covariance(self, rng):
        mean = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(sample_matrix_normal(mean, np.zeros((3, 3)), rng), mean)

    def test_degenerate_direction(self, rng):
        X = sample_matrix_normal(np.ones((3, 2)), np.diag([4.0, 0.0]), rng)
        np.testing.assert_array_equal(X[:, 1], 1.0)
        assert np.all(X[:, 0] != 1.0)

    def test_moments(self):
        rng = np.random.default_rng(7)
        draws = np.stack([sample_matrix_normal(np.zeros((2, 2)), np.eye(2), rng).ravel()
                          for _ in range(100_000)])
        emp = np.cov(draws.T)
        assert np.linalg.norm(emp - np.eye(4)) <= 0.05 * np.linalg.norm(np.eye(4))

    def test_column_covariance(self):
        rng = np.random.default_rng(8)
        cov = np.array([[2.0, 0.6], [0.6, 0.5]])
        rows = np.vstack([sample_matrix_normal(np.zeros((3, 2)), cov, rng) for _ in range(20_000)])
        np.testing.assert_allclose(np.cov(rows.T), cov, atol=0.05)

    def test_deterministic(self):
        a = sample_matrix_normal(np.zeros((2, 3)), np.eye(3), np.random.default_rng(5))
        b = sample_matrix_normal(np.zeros((2, 3)), np.eye(3), np.random.default_rng(5))
        assert a.tobytes() == b.tobytes()

    def test_not_psd(self, rng):
        with pytest.raises(DomainError):
            sample_matrix_normal(np.zeros((1, 2)), np.diag([1.0, -1e-3]), rng)

    def test_factor_clamps_roundoff(self):
        C = psd_factor(np.diag([1.0, -1e-12]))
        np.testing.assert_allclose(C.T @ C, np.diag([1.0, 0.0]), atol=1e-15)


def test_symmetrize_exact():
    M = np.random.default_rng(0).standard_normal((4, 4))
    S = symmetrize(M)
    assert np.max(np.abs(S - S.T)) == 0.0
