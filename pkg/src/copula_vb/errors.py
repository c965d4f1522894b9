from __future__ import annotations


class CopulaVBError(Exception):
    """Base class for every error raised by copula_vb."""


class DomainError(CopulaVBError, ValueError):
    """Input lies outside the domain of the operation."""


class MonotonicityError(CopulaVBError, RuntimeError):
    """An ELBO decreased by more than the allowed slack during a run."""

    def __init__(self, model: str, iteration: int, previous: float, current: float):
        self.model = model
        self.iteration = iteration
        self.previous = previous
        self.current = current
        super().__init__(
            f"{model}: ELBO decreased at iteration {iteration} "
            f"({previous:.12g} -> {current:.12g}, delta {current - previous:.3e})"
        )


class InstanceTooLargeError(CopulaVBError, ValueError):
    """Exact enumeration was requested beyond the label-space limit."""


class NoValidMixtureError(CopulaVBError, ValueError):
    """Every candidate score is infinite, so no mixture weight can be formed."""


class ConfigError(CopulaVBError, ValueError):
    """Malformed experiment configuration or unusable output location."""
