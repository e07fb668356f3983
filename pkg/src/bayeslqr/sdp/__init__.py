"""Direct Bayesian LQR through a semidefinite program."""
from bayeslqr.sdp.backends import BACKENDS, available_backends, default_backend
from bayeslqr.sdp.direct import (
    SdpSolution,
    cov_param_lqr,
    data_covariances,
    direct_bayes_lqr,
    recover_gain,
    solve_sdp,
)
from bayeslqr.sdp.problem import (
    LmiBlock,
    PsiSplit,
    SdpProblem,
    build_direct_sdp,
    certificate_from_gain,
    write_sdpa,
)

__all__ = [
    "BACKENDS",
    "LmiBlock",
    "PsiSplit",
    "SdpProblem",
    "SdpSolution",
    "available_backends",
    "build_direct_sdp",
    "certificate_from_gain",
    "cov_param_lqr",
    "data_covariances",
    "default_backend",
    "direct_bayes_lqr",
    "recover_gain",
    "solve_sdp",
    "write_sdpa",
]
