# cython: language_level=3
"""Compiled hot kernels (Riccati iteration, Lyapunov solve, simulation).

Loops run on plain C doubles over tiny dense matrices, where numpy call
overhead dominates the arithmetic. Same signatures as ``_pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, isfinite

cnp.import_array()

DEF CONVERGED = 0
DEF MAX_ITER = 1
DEF BREAKDOWN = 2


cdef int _lu_solve(double[:, ::1] G, double[:, ::1] X, Py_ssize_t d,
                   Py_ssize_t ncol) noexcept nogil:
    """Solve G Y = X in place (Gaussian elimination, partial pivoting).

    G is destroyed. Returns 0 on success, 1 on an exactly zero pivot.
    """
    cdef Py_ssize_t i, j, k, p
    cdef double amax, t, f
    for k in range(d):
        p = k
        amax = fabs(G[k, k])
        for i in range(k + 1, d):
            if fabs(G[i, k]) > amax:
                amax = fabs(G[i, k])
                p = i
        if amax == 0.0:
            return 1
        if p != k:
            for j in range(d):
                t = G[k, j]; G[k, j] = G[p, j]; G[p, j] = t
            for j in range(ncol):
                t = X[k, j]; X[k, j] = X[p, j]; X[p, j] = t
        for i in range(k + 1, d):
            f = G[i, k] / G[k, k]
            if f != 0.0:
                for j in range(k + 1, d):
                    G[i, j] -= f * G[k, j]
                for j in range(ncol):
                    X[i, j] -= f * X[k, j]
    for k in range(d - 1, -1, -1):
        for j in range(ncol):
            t = X[k, j]
            for i in range(k + 1, d):
                t -= G[k, i] * X[i, j]
            X[k, j] = t / G[k, k]
    return 0


def dare_iterate(const double[:, ::1] A, const double[:, ::1] B,
                 const double[:, ::1] Q, const double[:, ::1] R,
                 const double[:, ::1] N, double tol, long max_iter):
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[1]
    P_arr = np.array(Q, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] P = P_arr
    cdef double[:, ::1] PA = np.empty((n, n))
    cdef double[:, ::1] PB = np.empty((n, m))
    cdef double[:, ::1] G = np.empty((m, m))
    cdef double[:, ::1] H = np.empty((m, n))
    cdef double[:, ::1] X = np.empty((m, n))
    cdef double[:, ::1] Pn = np.empty((n, n))
    cdef Py_ssize_t i, j, k
    cdef long it
    cdef double s, step, pnorm, v
    cdef int status = MAX_ITER
    cdef long used = max_iter

    with nogil:
        for it in range(1, max_iter + 1):
            for i in range(n):
                for j in range(n):
                    s = 0.0
                    for k in range(n):
                        s = s + P[i, k] * A[k, j]
                    PA[i, j] = s
                for j in range(m):
                    s = 0.0
                    for k in range(n):
                        s = s + P[i, k] * B[k, j]
                    PB[i, j] = s
            for i in range(m):
                for j in range(m):
                    s = R[i, j]
                    for k in range(n):
                        s = s + B[k, i] * PB[k, j]
                    G[i, j] = s
                for j in range(n):
                    s = N[i, j]
                    for k in range(n):
                        s = s + B[k, i] * PA[k, j]
                    H[i, j] = s
                    X[i, j] = s
            if _lu_solve(G, X, m, n) != 0:
                status = BREAKDOWN
                used = it
                break
            for i in range(n):
                for j in range(n):
                    s = Q[i, j]
                    for k in range(n):
                        s = s + A[k, i] * PA[k, j]
                    for k in range(m):
                        s = s - H[k, i] * X[k, j]
                    Pn[i, j] = s
            step = 0.0
            pnorm = 0.0
            for i in range(n):
                for j in range(i, n):
                    v = 0.5 * (Pn[i, j] + Pn[j, i])
                    Pn[i, j] = v
                    Pn[j, i] = v
            for i in range(n):
                for j in range(n):
                    v = Pn[i, j] - P[i, j]
                    step = step + v * v
                    pnorm = pnorm + P[i, j] * P[i, j]
            if not isfinite(step):
                status = BREAKDOWN
                used = it
                break
            for i in range(n):
                for j in range(n):
                    P[i, j] = Pn[i, j]
            if sqrt(step) <= tol * (1.0 + sqrt(pnorm)):
                status = CONVERGED
                used = it
                break
    return P_arr, used, status


def lyap_kron(const double[:, ::1] Acl, const double[:, ::1] W):
    cdef Py_ssize_t n = Acl.shape[0]
    cdef Py_ssize_t nn = n * n
    cdef double[:, ::1] L = np.empty((nn, nn))
    rhs_arr = np.empty((nn, 1))
    cdef double[:, ::1] rhs = rhs_arr
    cdef Py_ssize_t i, j, k, l
    cdef int fail
    for i in range(n):
        for j in range(n):
            rhs[i * n + j, 0] = W[i, j]
            for k in range(n):
                for l in range(n):
                    L[i * n + j, k * n + l] = -Acl[i, k] * Acl[j, l]
            L[i * n + j, i * n + j] += 1.0
    with nogil:
        fail = _lu_solve(L, rhs, nn, 1)
    if fail:
        return np.zeros((n, n)), False
    S = rhs_arr.reshape(n, n)
    return 0.5 * (S + S.T), True


def simulate(const double[:, ::1] A, const double[:, ::1] B,
             const double[::1] x0, const double[:, ::1] U,
             const double[:, ::1] W):
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[1]
    cdef Py_ssize_t T = U.shape[1]
    X_arr = np.empty((n, T + 1))
    cdef double[:, ::1] X = X_arr
    cdef Py_ssize_t i, j, t
    cdef double s
    for i in range(n):
        X[i, 0] = x0[i]
    with nogil:
        for t in range(T):
            for i in range(n):
                s = W[i, t]
                for j in range(n):
                    s = s + A[i, j] * X[j, t]
                for j in range(m):
                    s = s + B[i, j] * U[j, t]
                X[i, t + 1] = s
    return X_arr
