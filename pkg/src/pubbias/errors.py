"""Exception hierarchy shared across the package."""


class PubBiasError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PubBiasError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DataError(PubBiasError, ValueError):
    """Input data are malformed or violate a documented schema."""


class InsufficientDataError(DataError):
    """Too few usable observations for the requested operation."""


class NoSolutionError(PubBiasError):
    """The defining equation of an estimator or search has no solution."""


class QuadratureError(PubBiasError):
    """Adaptive integration failed to reach the requested tolerance.

    Carries the best available estimate so callers can inspect how far
    the integrator got before giving up.
    """

    def __init__(self, message: str, best_estimate: float, error_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class DegenerateRuleError(PubBiasError):
    """The publication rule accepts (essentially) nothing, so conditional
    quantities are undefined."""


class BootstrapError(PubBiasError):
    """Too many bootstrap resamples failed to produce an estimate."""

    def __init__(self, message: str, n_failed: int, n_boot: int):
        super().__init__(message)
        self.n_failed = n_failed
        self.n_boot = n_boot


class SimulationError(PubBiasError):
    """A simulation produced no usable output."""
