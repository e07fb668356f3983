"""Exception hierarchy.

The CLI maps these onto exit codes (see ``bayeslqr.cli``).
"""


class BayesLqrError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(BayesLqrError, ValueError):
    pass


class DomainError(BayesLqrError, ValueError):
    """An argument lies outside the mathematical domain (e.g. non-PSD)."""


class ConfigError(BayesLqrError):
    pass


class DataError(BayesLqrError):
    pass


class RankDeficiencyError(BayesLqrError):
    pass


class NumericalError(BayesLqrError):
    pass


class InstabilityError(NumericalError):
    """A closed loop that must be stable has spectral radius >= 1."""


class ConvergenceError(NumericalError):
    pass


class StabilizabilityError(BayesLqrError):
    pass


class SdpError(NumericalError):
    pass


class AggregationError(BayesLqrError):
    """Nothing to aggregate: every trial at a sweep point was invalid."""


class SynthesisError(BayesLqrError):
    """A controller could not be synthesized from the data (CLI exit code 3)."""
