"""Dense matrix utilities: spectral radius, Lyapunov and Riccati solves,
PSD checks and matrix-normal sampling.

Matrices are plain ``numpy.ndarray`` objects. Feedback convention is
``u = K x`` everywhere, so Riccati gains carry a leading minus sign.
"""
import numpy as np

from bayeslqr import kernels
from bayeslqr.errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    InstabilityError,
    NumericalError,
    StabilizabilityError,
)

# eigenvalues of a covariance factor in [-PSD_CLAMP, 0] are treated as zero
PSD_CLAMP = 1e-10


def as_matrix(M, name="matrix"):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} has non-finite entries")
    return M


def symmetrize(M):
    """Return (M + M')/2 as a float array."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def _require_square(M, name):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")


def spectral_radius(M):
    """Largest eigenvalue modulus of a square matrix.

    >>> spectral_radius(np.diag([0.5, -0.9]))
    0.9
    """
    M = np.asarray(M, dtype=float)
    _require_square(M, "M")
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def is_psd(M, tol=0.0):
    """True iff the smallest eigenvalue of symmetric ``M`` is >= -tol."""
    M = np.asarray(M, dtype=float)
    _require_square(M, "M")
    return bool(np.linalg.eigvalsh(symmetrize(M))[0] >= -tol)


def solve_discrete_lyapunov(Acl, W):
    """Solve ``Sigma = W + Acl Sigma Acl'`` for a Schur-stable ``Acl``.

    Uses a direct solve of ``(I - Acl kron Acl) vec(Sigma) = vec(W)``,
    which is exact and cheap at the state dimensions used here (n <= 50).

    Raises
    ------
    InstabilityError
        If the spectral radius of ``Acl`` is >= 1.
    NumericalError
        If the vectorized system is singular.
    """
    Acl = np.asarray(Acl, dtype=float)
    W = np.asarray(W, dtype=float)
    _require_square(Acl, "Acl")
    if W.shape != Acl.shape:
        raise DimensionError(f"W has shape {W.shape}, expected {Acl.shape}")
    rho = spectral_radius(Acl)
    if rho >= 1.0:
        raise InstabilityError(f"closed loop is not stable (spectral radius {rho:.6g})")
    Sigma, ok = kernels.lyap_kron(Acl, symmetrize(W))
    if not ok:
        raise NumericalError("singular Kronecker system in Lyapunov solve")
    return Sigma


def lyapunov_residual(Sigma, Acl, W):
    return float(np.linalg.norm(Sigma - W - Acl @ Sigma @ Acl.T))


def dare_residual(P, A, B, Qt, Rt, N):
    """Frobenius residual of the cross-term Riccati fixed-point equation."""
    G = Rt + B.T @ P @ B
    H = B.T @ P @ A + N
    rhs = Qt + A.T @ P @ A - H.T @ np.linalg.solve(G, H)
    return float(np.linalg.norm(P - rhs))


def solve_dare_cross(A, B, Qt, Rt, N=None, *, tol=1e-12, max_iter=100_000):
    """Discrete algebraic Riccati equation with a state-input cross term.

    Minimizes the stationary cost of ``u'Rt u + 2 u'N x + x'Qt x`` (``N`` is
    m x n) subject to ``x+ = A x + B u``. Solved by the fixed-point iteration
    ``P <- Qt + A'PA - (A'PB + N')(Rt + B'PB)^-1 (B'PA + N)`` from ``P = Qt``.

    Returns
    -------
    P : ndarray, (n, n)
    K : ndarray, (m, n)
        Gain for ``u = K x``: ``K = -(Rt + B'PB)^-1 (B'PA + N)``.

    Raises
    ------
    ConvergenceError
        No convergence within ``max_iter`` iterations, or the iterates blew
        up (typical for an unstabilizable pair).
    StabilizabilityError
        The converged gain does not stabilize ``A + B K``.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n, m = A.shape[0], B.shape[1]
    _require_square(A, "A")
    if B.shape[0] != n:
        raise DimensionError(f"B has {B.shape[0]} rows, expected {n}")
    Qt = symmetrize(as_matrix(Qt, "Qt"))
    Rt = symmetrize(as_matrix(Rt, "Rt"))
    N = np.zeros((m, n)) if N is None else as_matrix(N, "N")
    if Qt.shape != (n, n) or Rt.shape != (m, m) or N.shape != (m, n):
        raise DimensionError(
            f"cost blocks have shapes Qt={Qt.shape}, Rt={Rt.shape}, N={N.shape}"
            f" for n={n}, m={m}"
        )

    P, iters, status = kernels.dare_iterate(A, B, Qt, Rt, N, tol, max_iter)
    if status != kernels.CONVERGED:
        why = "iterates diverged" if status == kernels.BREAKDOWN else "iteration limit reached"
        raise ConvergenceError(f"Riccati iteration failed after {iters} iterations: {why}")
    K = -np.linalg.solve(Rt + B.T @ P @ B, B.T @ P @ A + N)
    rho = spectral_radius(A + B @ K)
    if rho >= 1.0:
        raise StabilizabilityError(
            f"Riccati gain does not stabilize the pair (spectral radius {rho:.6g})"
        )
    return P, K


def psd_factor(cov):
    """Return ``C`` with ``C'C = cov`` via a clamped eigendecomposition."""
    cov = symmetrize(as_matrix(cov, "cov"))
    _require_square(cov, "cov")
    w, V = np.linalg.eigh(cov)
    if w.size and w[0] < -PSD_CLAMP:
        raise DomainError(f"covariance is not PSD (min eigenvalue {w[0]:.3g})")
    w = np.clip(w, 0.0, None)
    return np.sqrt(w)[:, None] * V.T


def sample_matrix_normal(mean, col_cov, rng):
    """Draw from MN(mean, I, col_cov): ``mean + E C`` with ``C'C = col_cov``.

    Rows are independent with covariance ``col_cov``; ``rng`` is a
    ``numpy.random.Generator`` and is the only source of randomness.
    """
    mean = as_matrix(mean, "mean")
    C = psd_factor(col_cov)
    if C.shape[0] != mean.shape[1]:
        raise DimensionError(
            f"col_cov is {C.shape[0]}x{C.shape[0]} but mean has {mean.shape[1]} columns"
        )
    E = rng.standard_normal(mean.shape)
    return mean + E @ C
