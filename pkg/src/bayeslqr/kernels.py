"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``BAYESLQR_PURE_PYTHON=1`` to force the pure-Python kernels.
"""
import os

import numpy as np

from bayeslqr import _pykernels

if os.environ.get("BAYESLQR_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from bayeslqr import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

CONVERGED = _pykernels.CONVERGED
MAX_ITER = _pykernels.MAX_ITER
BREAKDOWN = _pykernels.BREAKDOWN

# above this state dimension the O(n^6) hand-written solve loses to LAPACK
_KRON_KERNEL_MAX_N = 8


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def dare_iterate(A, B, Q, R, N, tol, max_iter):
    return _impl.dare_iterate(_c(A), _c(B), _c(Q), _c(R), _c(N), float(tol), int(max_iter))


def lyap_kron(Acl, W):
    if Acl.shape[0] > _KRON_KERNEL_MAX_N:
        return _pykernels.lyap_kron(_c(Acl), _c(W))
    return _impl.lyap_kron(_c(Acl), _c(W))


def simulate(A, B, x0, U, W):
    return _impl.simulate(_c(A), _c(B), _c(x0).reshape(-1), _c(U), _c(W))
