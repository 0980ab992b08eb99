"""Exception types shared across the package.

The CLI maps each of these to a fixed exit code, see ``linf_sphere.cli``.
"""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(DomainError):
    """A configuration value is missing or malformed.

    ``key`` names the offending entry when it is known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NotPositiveSemiDefinite(ValueError):
    """A covariance has a Legendre coefficient that is clearly negative."""


class FactorizationFailure(RuntimeError):
    """No valid factor could be produced, even after jitter escalation."""


class ThresholdNotFound(RuntimeError):
    """The truncation-degree scan found no qualifying degree."""


class DegenerateData(ValueError):
    """Training data is empty or inconsistent."""


class FormatError(ValueError):
    """A serialized model or sample file is malformed or violates its invariants."""
