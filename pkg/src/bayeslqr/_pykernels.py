"""Pure-Python (numpy) versions of the hot kernels.

Signatures and return conventions match ``_ckernels.pyx`` exactly; the
dispatcher in :mod:`bayeslqr.kernels` picks one of the two at import.
"""
import numpy as np

# status codes shared with the compiled kernels
CONVERGED = 0
MAX_ITER = 1
BREAKDOWN = 2


def dare_iterate(A, B, Q, R, N, tol, max_iter):
    """Riccati fixed-point iteration with cross term.

    P <- Q + A'PA - (A'PB + N')(R + B'PB)^-1 (B'PA + N), starting at P = Q.
    Returns ``(P, iterations, status)``.
    """
    P = np.array(Q, dtype=float, copy=True)
    At = A.T
    for it in range(1, max_iter + 1):
        PA = P @ A
        PB = P @ B
        G = R + B.T @ PB
        H = B.T @ PA + N
        try:
            X = np.linalg.solve(G, H)
        except np.linalg.LinAlgError:
            return P, it, BREAKDOWN
        P_new = Q + At @ PA - H.T @ X
        P_new = 0.5 * (P_new + P_new.T)
        if not np.all(np.isfinite(P_new)):
            return P, it, BREAKDOWN
        step = np.linalg.norm(P_new - P)
        scale = 1.0 + np.linalg.norm(P)
        P = P_new
        if step <= tol * scale:
            return P, it, CONVERGED
    return P, max_iter, MAX_ITER


def lyap_kron(Acl, W):
    """Solve Sigma = W + Acl Sigma Acl' through the vectorized system.

    Returns ``(Sigma, ok)``; ``ok`` is False when the linear system is
    singular.
    """
    n = Acl.shape[0]
    lhs = np.eye(n * n) - np.kron(Acl, Acl)
    try:
        vec = np.linalg.solve(lhs, W.reshape(-1))
    except np.linalg.LinAlgError:
        return np.zeros((n, n)), False
    S = vec.reshape(n, n)
    return 0.5 * (S + S.T), True


def simulate(A, B, x0, U, W):
    """Propagate x_{k+1} = A x_k + B u_k + w_k; returns states x_0..x_T."""
    n = A.shape[0]
    T = U.shape[1]
    X = np.empty((n, T + 1))
    X[:, 0] = x0
    for k in range(T):
        X[:, k + 1] = A @ X[:, k] + B @ U[:, k] + W[:, k]
    return X
