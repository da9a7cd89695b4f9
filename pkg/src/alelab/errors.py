"""Exception hierarchy shared across the package."""


class AlelabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(AlelabError):
    """Invalid configuration or constructor arguments."""


class DomainError(AlelabError):
    """Input outside the mathematical domain of an operation."""


class ContractViolation(AlelabError):
    """An API precondition was violated (wrong reference metric, missing parity, ...)."""


class NumericError(AlelabError):
    """A numerical procedure failed to converge or produced invalid values."""


class GaugeError(AlelabError):
    """Gauge alignment / projection failures (no root, ambiguity, singular transfer)."""
