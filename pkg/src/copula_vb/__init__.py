"""Copula variational Bayes: CVB, VB, EM and k-means as KL projections."""

from .engine import ConditionalModel, StoppingRule, Trace, run
from .errors import (
    ConfigError,
    CopulaVBError,
    DomainError,
    InstanceTooLargeError,
    MonotonicityError,
    NoValidMixtureError,
)

__all__ = [
    "ConditionalModel",
    "ConfigError",
    "CopulaVBError",
    "DomainError",
    "InstanceTooLargeError",
    "MonotonicityError",
    "NoValidMixtureError",
    "StoppingRule",
    "Trace",
    "__version__",
    "run",
]
__version__ = "0.1.0"
