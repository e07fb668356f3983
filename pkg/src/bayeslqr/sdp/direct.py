"""Solve the direct SDP, check the solution, and recover the gain."""
import logging
from dataclasses import dataclass, field

import numpy as np

from bayeslqr.errors import DomainError, RankDeficiencyError, SdpError
from bayeslqr.estimation import Posterior
from bayeslqr.lqr import Gain, LqrWeights, STABILITY_MARGIN
from bayeslqr.linalg import spectral_radius, symmetrize
from bayeslqr.sysdata import regressor
from bayeslqr.sdp.backends import BACKENDS, available_backends, default_backend
from bayeslqr.sdp.problem import PsiSplit, build_direct_sdp

log = logging.getLogger(__name__)

# acceptance bounds on a returned optimal point
EQ_TOL = 1e-6
PSD_TOL = 1e-6
PARAM_TOL = 1e-5
# interior-point gap tolerance; the recovered gain is only accurate to about
# its square root, so ask for more and retry at ROBUST_TOL if a backend balks
DEFAULT_TOL = 1e-11
ROBUST_TOL = 1e-8
FALLBACK_ORDER = ("clarabel", "cvxopt", "ipm")


@dataclass
class SdpSolution:
    status: str
    Sigma: np.ndarray = None
    S: np.ndarray = None
    L: np.ndarray = None
    M: np.ndarray = None
    objective_value: float = float("nan")
    residuals: dict = field(default_factory=dict)
    backend: str = ""
    info: dict = field(default_factory=dict)
    x: np.ndarray = None

    @property
    def optimal(self):
        return self.status == "optimal"


def solve_sdp(prob, tol=DEFAULT_TOL, backend=None):
    """Solve ``prob`` and post-check primal feasibility.

    An 'optimal' report from a backend is downgraded to 'numerical_failure'
    if the equality residual exceeds ``1e-6 (1 + ||Sigma||_F)`` or some LMI
    block has an eigenvalue below ``-1e-6``.
    """
    backend = backend or default_backend()
    try:
        solver = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown SDP backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    x, status, info = solver(prob, tol)
    sol = SdpSolution(status=status, backend=backend, info=info)
    if x is None:
        return sol
    parts = prob.unpack(x)
    sol.x = x
    sol.Sigma, sol.S, sol.L, sol.M = parts["Sigma"], parts["S"], parts["L"], parts.get("M")
    sol.objective_value = prob.objective(x)
    res = prob.residuals(x)
    # Psi2 S is not structurally symmetric; report its skew part separately
    n = prob.n
    ps = prob.A_eq[: n * n] @ x
    eq_mat = ps.reshape(n, n)
    res["skew"] = float(np.linalg.norm(eq_mat - eq_mat.T))
    sol.residuals = res
    if status == "optimal":
        bound = EQ_TOL * (1.0 + np.linalg.norm(sol.Sigma))
        if res["equality"] > bound or res["psd_min_eig"] < -PSD_TOL:
            log.info("backend %s reported optimal but residuals fail: %s", backend, res)
            sol.status = "numerical_failure"
    return sol


def recover_gain(sol, split, method="direct_bayes"):
    """``K = Psi1 S Sigma^-1``, with a check that ``Psi (S Sigma^-1) = [K; I]``."""
    if not sol.optimal:
        raise SdpError(f"cannot recover a gain from a {sol.status} solution")
    try:
        V = np.linalg.solve(sol.Sigma.T, sol.S.T).T
    except np.linalg.LinAlgError:
        raise SdpError("Sigma is singular; the direct SDP needs sigma_w^2 > 0") from None
    K = split.psi1 @ V
    n = sol.Sigma.shape[0]
    resid = np.linalg.norm(split.psi @ V - np.vstack([K, np.eye(n)]))
    sol.residuals["parameterization"] = float(resid)
    if resid > PARAM_TOL:
        raise SdpError(f"covariance parameterization residual {resid:.3g} exceeds {PARAM_TOL}")
    return Gain(K, method)


def _backend_chain(backend):
    if backend is not None:
        return [backend]
    first = default_backend()
    return [first] + [b for b in FALLBACK_ORDER if b != first and b in available_backends()]


def _round_bits(x, bits=32):
    """Round to ``bits`` significant bits, so that cost data normalized from
    ``(Q, R, lam)`` and from ``(cQ, cR, c lam)`` come out bit-identical."""
    mant, expo = np.frexp(np.asarray(x, dtype=float))
    return np.ldexp(np.round(mant * 2.0**bits) / 2.0**bits, expo)


def _tolerance_ladder(tol):
    """``tol`` then coarser by decades down to ``ROBUST_TOL``."""
    steps = [tol]
    while steps[-1] < ROBUST_TOL:
        steps.append(min(float(f"{steps[-1] * 10.0:.6g}"), ROBUST_TOL))
    return steps


def direct_bayes_lqr(p, w, lam, backend=None, tol=DEFAULT_TOL, method="direct_bayes",
                     return_solution=False):
    """Direct Bayesian LQR gain from a posterior (build, solve, recover).

    Pass a posterior computed with a zero prior precision and
    ``method="cov_param"`` to get the covariance-parameterized baseline.

    The SDP is solved at unit noise scale: ``sigma_w^2`` appears only in the
    first block, every variable scales linearly with it, and ``K`` is
    invariant. The cost data ``(Q, R, lam)`` is likewise divided by
    ``Tr Q + Tr R + lam Tr Psi`` and rounded to 32 significant bits before
    solving. Both keep the problem well conditioned and make ``K`` invariant
    to either scale (the rounding absorbs the last-ulp differences that
    would otherwise steer the solver down a different path). The
    returned ``objective_value`` is that of the unnormalized problem at unit
    noise.

    Each backend is asked for ``tol`` and, if it fails or flags its answer
    as inaccurate, asked again at coarser tolerances down to
    ``ROBUST_TOL``. With ``backend=None`` the default backend is tried
    first, then the other installed backends in turn. An inaccurate answer is used only when nothing better turns up.
    With ``return_solution`` the result is ``(gain, SdpSolution)``.
    """
    if method not in ("direct_bayes", "cov_param"):
        raise DomainError(f"method must be direct_bayes or cov_param, got {method!r}")
    lam = float(lam)
    scale = float(np.trace(w.Q) + np.trace(w.R) + max(lam, 0.0) * np.trace(p.psi))
    wn = LqrWeights(_round_bits(w.Q / scale), _round_bits(w.R / scale))
    prob = build_direct_sdp(p, wn, float(_round_bits(lam / scale)), sigma_w_sq=1.0)
    split = PsiSplit.from_psi(p.psi, p.m)
    failures = []
    fallback = None
    for name in _backend_chain(backend):
        for t in _tolerance_ladder(tol):
            sol = solve_sdp(prob, tol=t, backend=name)
            if not sol.optimal:
                failures.append(f"{name}@{t:g}: {sol.status} ({sol.info.get('raw_status', '')})")
                continue
            try:
                gain = recover_gain(sol, split, method=method)
            except SdpError as exc:
                failures.append(f"{name}@{t:g}: {exc}")
                continue
            if not sol.info.get("inaccurate"):
                break
            failures.append(f"{name}@{t:g}: inaccurate")
            fallback = fallback or (gain, sol)
        else:
            continue
        break
    else:
        if fallback is None:
            raise SdpError("direct SDP not solved; " + "; ".join(failures))
        log.warning("using an inaccurate SDP solution; %s", "; ".join(failures))
        gain, sol = fallback
    sol.info["tol"] = t if not sol.info.get("inaccurate") else None
    sol.objective_value = float(np.sum(w.Q * sol.Sigma) + np.sum(w.R * sol.L))
    if sol.M is not None:
        sol.objective_value += lam * float(np.sum(p.psi * sol.M))
    sol.info["objective_scale"] = scale
    rho = spectral_radius(p.A_hat + p.B_hat @ gain.K)
    if rho >= 1.0 - STABILITY_MARGIN:
        raise SdpError(f"recovered gain does not stabilize the posterior mean (rho={rho:.6g})")
    return (gain, sol) if return_solution else gain


def data_covariances(d, noise):
    """Sample covariances ``Phi = D0 D0'/T`` and ``X1 D0'/T`` of a batch,
    packaged with the least-squares model so they can feed the SDP builder.
    """
    D0 = regressor(d)
    T = d.T
    phi = symmetrize(D0 @ D0.T / T)
    if np.linalg.matrix_rank(D0) < D0.shape[0]:
        raise RankDeficiencyError("data is not persistently exciting; Phi is singular")
    phi_inv = symmetrize(np.linalg.inv(phi))
    theta, *_ = np.linalg.lstsq(D0.T, d.X1.T, rcond=None)
    s2 = noise.sigma_w_sq
    return Posterior(mean=theta.T, psi=phi, psi_inv=phi_inv, param_cov=(s2 / T) * phi_inv,
                     xbar1=d.X1 @ D0.T / T, T=T, sigma_w_sq=s2)


def cov_param_lqr(d, w, lam, noise, backend=None, tol=DEFAULT_TOL, return_solution=False):
    """Covariance-parameterized data-driven LQR, built from the raw batch."""
    return direct_bayes_lqr(data_covariances(d, noise), w, lam, backend=backend, tol=tol,
                            method="cov_param", return_solution=return_solution)
