"""Bayesian data-driven LQR.

Matrix-normal posterior over ``[B A]`` from input-state data, indirect
(Riccati) and direct (SDP) synthesis of the posterior-regularized LQR
gain, and a Monte Carlo harness for comparing methods.
"""
from bayeslqr.errors import BayesLqrError
from bayeslqr.estimation import Posterior, Prior, compute_posterior
from bayeslqr.lqr import Gain, LqrWeights, ce_lqr, evaluate_cost, indirect_bayes_lqr, lqr_true
from bayeslqr.sysdata import DataSet, NoiseSpec, SystemModel, simulate_openloop

__version__ = "0.1.0"

__all__ = [
    "BayesLqrError",
    "DataSet",
    "Gain",
    "LqrWeights",
    "NoiseSpec",
    "Posterior",
    "Prior",
    "SystemModel",
    "ce_lqr",
    "compute_posterior",
    "evaluate_cost",
    "indirect_bayes_lqr",
    "lqr_true",
    "simulate_openloop",
    "__version__",
]
