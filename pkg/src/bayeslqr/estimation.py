"""Matrix-normal posterior of ``[B A]`` given input-state data.

Under a Gaussian prior ``[B A] ~ MN([B0 A0], I_n, Omega^-1)`` and white
noise of known variance, the posterior is again matrix normal with

    Psi      = (D0 D0' + s2 Omega) / T
    Xbar1    = (X1 D0' + s2 [B0 A0] Omega) / T
    mean     = Xbar1 Psi^-1
    col cov  = s2 / T * Psi^-1

and ``mean`` is the minimizer of the regularized least-squares problem
``||X1 - Theta D0||^2 / s2 + ||(Theta - Theta0) Omega^{1/2}||^2``.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from bayeslqr.errors import ConfigError, DimensionError, DomainError, RankDeficiencyError
from bayeslqr.linalg import as_matrix, is_psd, symmetrize
from bayeslqr.sysdata import SystemModel, regressor

# Psi counts as singular when its eigenvalue ratio falls below this
PSI_RANK_TOL = 1e-13


@dataclass(frozen=True)
class Prior:
    """Gaussian prior on ``[B A]``: mean (n, m+n) and column precision Omega."""

    mean: np.ndarray
    precision: np.ndarray

    def __post_init__(self):
        mean = as_matrix(self.mean, "prior mean")
        Om = symmetrize(as_matrix(self.precision, "prior precision"))
        n, p = mean.shape
        if p <= n:
            raise DimensionError(f"prior mean must be n x (m+n) with m >= 1, got {mean.shape}")
        if Om.shape != (p, p):
            raise DimensionError(f"precision is {Om.shape}, expected ({p}, {p})")
        if not is_psd(Om, tol=1e-12 * max(1.0, np.abs(Om).max())):
            raise DomainError("prior precision must be positive semidefinite")
        m = p - n
        if np.any(Om[:m, m:] != 0.0):
            warnings.warn(
                "prior precision is not block diagonal in (B, A); using it as given",
                stacklevel=3,
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "precision", Om)

    @property
    def n(self):
        return self.mean.shape[0]

    @property
    def m(self):
        return self.mean.shape[1] - self.mean.shape[0]

    @property
    def is_noninformative(self):
        return not np.any(self.precision)

    @classmethod
    def noninformative(cls, n, m):
        """Omega = 0: the posterior mean reduces to ordinary least squares."""
        return cls(np.zeros((n, m + n)), np.zeros((m + n, m + n)))

    @classmethod
    def spring_mass(cls, alpha_bar, beta_bar, gamma_bar, sigma_alpha, sigma_beta,
                    sigma_gamma, sample_time=1.0):
        """Prior induced by independent Gaussians on the spring-mass-damper
        parameters, for ``A = [[1, Ts], [-alpha, 1-beta]]``, ``B = [0; gamma]``.
        """
        sig = np.array([sigma_gamma, sigma_alpha, sigma_beta], dtype=float)
        if np.any(sig <= 0):
            raise ConfigError("prior standard deviations must be > 0 to form a precision")
        mean = np.array([
            [0.0, 1.0, sample_time],
            [gamma_bar, -alpha_bar, 1.0 - beta_bar],
        ])
        return cls(mean, np.diag(sig ** -2.0))


@dataclass(frozen=True)
class Posterior:
    mean: np.ndarray
    psi: np.ndarray
    psi_inv: np.ndarray
    param_cov: np.ndarray
    xbar1: np.ndarray
    T: int
    sigma_w_sq: float

    @property
    def n(self):
        return self.mean.shape[0]

    @property
    def m(self):
        return self.mean.shape[1] - self.mean.shape[0]

    @property
    def B_hat(self):
        return self.mean[:, : self.m]

    @property
    def A_hat(self):
        return self.mean[:, self.m :]

    @property
    def mean_system(self):
        return SystemModel(self.A_hat, self.B_hat)


def compute_posterior(d, prior, noise):
    """Posterior of ``[B A]`` from data ``d`` under ``prior``.

    Raises
    ------
    RankDeficiencyError
        If Psi is singular, i.e. the data is not persistently exciting and
        the prior precision does not make up for it.
    """
    n, m, T = d.n, d.m, d.T
    if prior.n != n or prior.m != m:
        raise DimensionError(
            f"prior is for (n={prior.n}, m={prior.m}), data has (n={n}, m={m})"
        )
    s2 = noise.sigma_w_sq
    D0 = regressor(d)
    psi = symmetrize((D0 @ D0.T + s2 * prior.precision) / T)
    xbar1 = (d.X1 @ D0.T + s2 * prior.mean @ prior.precision) / T
    # Cholesky alone can succeed on a rank-deficient Psi through roundoff
    eig = np.linalg.eigvalsh(psi)
    try:
        if not eig[0] > PSI_RANK_TOL * eig[-1]:
            raise sla.LinAlgError
        cf = sla.cho_factor(psi)
    except sla.LinAlgError:
        raise RankDeficiencyError(
            "regularized data covariance Psi is singular: collect more (exciting) "
            "data or add prior precision"
        ) from None
    psi_inv = symmetrize(sla.cho_solve(cf, np.eye(m + n)))
    # mean = xbar1 Psi^-1, written as prior mean plus a data correction so
    # that no data returns the prior mean bit for bit
    resid = d.X1 - prior.mean @ D0
    mean = prior.mean + sla.cho_solve(cf, (resid @ D0.T / T).T).T
    return Posterior(
        mean=mean,
        psi=psi,
        psi_inv=psi_inv,
        param_cov=(s2 / T) * psi_inv,
        xbar1=xbar1,
        T=T,
        sigma_w_sq=s2,
    )


def map_objective(theta, d, prior, noise):
    """Regularized least-squares objective whose minimizer is the MAP estimate."""
    resid = d.X1 - theta @ regressor(d)
    delta = theta - prior.mean
    fit = np.sum(resid * resid) / noise.sigma_w_sq if noise.sigma_w_sq > 0 else 0.0
    return fit + np.trace(delta @ prior.precision @ delta.T)


def map_gradient(theta, d, prior, noise):
    D0 = regressor(d)
    g = 2.0 * (theta - prior.mean) @ prior.precision
    if noise.sigma_w_sq > 0:
        g = g - 2.0 / noise.sigma_w_sq * (d.X1 - theta @ D0) @ D0.T
    return g


def posterior_predictive_closed_loop_cov(p, K):
    """``[K' I] Sigma_BA [K; I]``: per-row second moment of the closed-loop
    perturbation ``dB K + dA`` under the posterior.
    """
    K = as_matrix(K, "K")
    if K.shape != (p.m, p.n):
        raise DimensionError(f"K has shape {K.shape}, expected ({p.m}, {p.n})")
    KI = np.vstack([K, np.eye(p.n)])
    return symmetrize(KI.T @ p.param_cov @ KI)
