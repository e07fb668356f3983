"""Model-based LQR, cost evaluation, certainty-equivalence and indirect
Bayesian LQR.

All gains follow ``u = K x``. Synthesis functions do not take the noise
variance: with the posterior fixed, the optimal gain is invariant to it.
"""
import math
from dataclasses import dataclass

import numpy as np

from bayeslqr.errors import DimensionError, DomainError, NumericalError
from bayeslqr.linalg import (
    as_matrix,
    is_psd,
    solve_dare_cross,
    solve_discrete_lyapunov,
    spectral_radius,
    symmetrize,
)

UNSTABLE = math.inf
"""Cost value reported for a gain that does not stabilize the system."""

# closed loops with spectral radius above 1 - STABILITY_MARGIN are unstable
STABILITY_MARGIN = 1e-10

METHODS = ("true", "ce", "indirect_bayes", "direct_bayes", "cov_param")


@dataclass(frozen=True)
class LqrWeights:
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = as_matrix(self.Q, "Q")
        R = as_matrix(self.R, "R")
        if Q.shape[0] != Q.shape[1] or R.shape[0] != R.shape[1]:
            raise DimensionError(f"Q {Q.shape} and R {R.shape} must be square")
        Q, R = symmetrize(Q), symmetrize(R)
        if not is_psd(Q, tol=0.0):
            raise DomainError("Q must be positive semidefinite")
        if not is_psd(R - 1e-12 * np.eye(R.shape[0]), tol=0.0):
            raise DomainError("R must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def m(self):
        return self.R.shape[0]

    def scaled(self, c):
        return LqrWeights(c * self.Q, c * self.R)


@dataclass(frozen=True)
class Gain:
    K: np.ndarray
    method: str

    def __post_init__(self):
        object.__setattr__(self, "K", as_matrix(self.K, "K"))
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")


def check_lambda(lam):
    lam = float(lam)
    if not lam >= 0.0:
        raise DomainError(f"regularization weight must be >= 0, got {lam}")
    return lam


def _gain_matrix(g):
    return g.K if isinstance(g, Gain) else as_matrix(g, "K")


def is_stabilizing(sys, K):
    return spectral_radius(sys.A + sys.B @ _gain_matrix(K)) < 1.0 - STABILITY_MARGIN


def stationary_covariance(sys, K, noise):
    Acl = sys.A + sys.B @ _gain_matrix(K)
    return solve_discrete_lyapunov(Acl, noise.sigma_w_sq * np.eye(sys.n))


def evaluate_cost(sys, K, w, noise):
    """Stationary cost ``Tr((Q + K'RK) Sigma_K)`` of ``u = K x`` on ``sys``.

    Returns ``UNSTABLE`` (``inf``) when the closed loop is not stable; this
    is a value, not an error.
    """
    K = _gain_matrix(K)
    if K.shape != (sys.m, sys.n):
        raise DimensionError(f"K has shape {K.shape}, expected ({sys.m}, {sys.n})")
    if not is_stabilizing(sys, K):
        return UNSTABLE
    Sigma = stationary_covariance(sys, K, noise)
    return float(np.trace((w.Q + K.T @ w.R @ K) @ Sigma))


def lqr_true(sys, w, noise):
    """Optimal gain and cost for a known system.

    Returns ``(Gain, cost)``; the cost is the Lyapunov-based stationary cost,
    cross-checked against ``sigma_w^2 Tr(P)``.
    """
    P, K = solve_dare_cross(sys.A, sys.B, w.Q, w.R)
    cost = evaluate_cost(sys, K, w, noise)
    via_p = noise.sigma_w_sq * float(np.trace(P))
    if cost == UNSTABLE or abs(cost - via_p) > 1e-8 * max(abs(via_p), 1e-300):
        raise NumericalError(
            f"optimal cost mismatch: Lyapunov route {cost!r}, Riccati route {via_p!r}"
        )
    return Gain(K, "true"), cost


def ce_lqr(p, w):
    """Certainty-equivalence gain: LQR for the posterior mean system."""
    _, K = solve_dare_cross(p.A_hat, p.B_hat, w.Q, w.R)
    return Gain(K, "ce")


def regularized_cost_blocks(p, w, lam):
    """Split ``blkdiag(R, Q) + lam Psi^-1`` into ``(Qt, Rt, N)``.

    The stacking is ``[u; x]`` (input first), so the per-step cost is
    ``u'Rt u + 2 u'N x + x'Qt x`` with ``N`` of shape (m, n).
    """
    lam = check_lambda(lam)
    m, n = p.m, p.n
    C = np.zeros((m + n, m + n))
    C[:m, :m] = w.R
    C[m:, m:] = w.Q
    C = symmetrize(C + lam * p.psi_inv)
    return C[m:, m:], C[:m, :m], C[:m, m:]


def indirect_bayes_lqr(p, w, lam):
    """Gain minimizing the posterior-regularized cost

        Tr((Q + K'RK) Sigma) + lam Tr([K; I]' Psi^-1 [K; I] Sigma)

    over the posterior mean dynamics. The regularizer only changes the cost
    blocks, so this is one Riccati solve with a cross term.
    """
    Qt, Rt, N = regularized_cost_blocks(p, w, lam)
    _, K = solve_dare_cross(p.A_hat, p.B_hat, Qt, Rt, N)
    return Gain(K, "indirect_bayes")


def bayes_objective(p, w, noise, K, lam):
    """Value of the regularized objective at ``K`` on the posterior mean
    system (``UNSTABLE`` if ``K`` does not stabilize it).
    """
    K = _gain_matrix(K)
    sys = p.mean_system
    if not is_stabilizing(sys, K):
        return UNSTABLE
    Sigma = stationary_covariance(sys, K, noise)
    KI = np.vstack([K, np.eye(p.n)])
    base = np.trace((w.Q + K.T @ w.R @ K) @ Sigma)
    reg = lam * np.trace(KI.T @ p.psi_inv @ KI @ Sigma)
    return float(base + reg)
