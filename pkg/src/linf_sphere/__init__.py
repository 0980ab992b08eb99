"""Sup-norm recovery of functions on the unit sphere.

Modules: ``harmonics`` (dimensions, Legendre polynomials, quadrature, ReLU
coefficients), ``sphere`` (points, ridge functions, norm estimates), ``grf``
(isotropic Gaussian random fields), ``recovery`` (truncated kernel ERM,
random-feature networks, hard instances), ``experiments`` and ``cli``.
"""

from .errors import (
    ConfigError,
    DegenerateData,
    DomainError,
    FactorizationFailure,
    FormatError,
    NotPositiveSemiDefinite,
    ThresholdNotFound,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateData",
    "DomainError",
    "FactorizationFailure",
    "FormatError",
    "NotPositiveSemiDefinite",
    "ThresholdNotFound",
]
