from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError

PROB_TOL = 1e-12


def _require_positive(name: str, value: float) -> None:
    if not np.isfinite(value) or value <= 0.0:
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")


def _require_correlation(value: float) -> None:
    if not np.isfinite(value) or abs(value) >= 1.0:
        raise DomainError(f"rho must lie strictly inside (-1, 1), got {value!r}")


@dataclass(frozen=True)
class Gaussian1D:
    mean: float
    scale: float

    def __post_init__(self) -> None:
        _require_positive("scale", self.scale)

    @property
    def dim(self) -> int:
        return 1

    def mean_vector(self) -> np.ndarray:
        return np.array([self.mean], dtype=float)

    def covariance(self) -> np.ndarray:
        return np.array([[self.scale**2]], dtype=float)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class Gaussian2DIso:
    """N(mean, scale^2 I_2), the cluster density of the mixture model."""

    mean: tuple[float, float]
    scale: float = 1.0

    def __post_init__(self) -> None:
        if len(self.mean) != 2:
            raise DomainError(f"mean must be a pair, got {self.mean!r}")
        _require_positive("scale", self.scale)

    @property
    def dim(self) -> int:
        return 2

    def mean_vector(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    def covariance(self) -> np.ndarray:
        return np.eye(2) * self.scale**2

    def to_dict(self) -> dict[str, Any]:
        return {"mean": list(self.mean), "scale": self.scale}


@dataclass(frozen=True)
class BivariateGaussian:
    """Bivariate normal with standard deviations sigma1, sigma2 and correlation rho."""

    sigma1: float
    sigma2: float
    rho: float = 0.0
    mean1: float = 0.0
    mean2: float = 0.0

    def __post_init__(self) -> None:
        _require_positive("sigma1", self.sigma1)
        _require_positive("sigma2", self.sigma2)
        _require_correlation(self.rho)

    @property
    def dim(self) -> int:
        return 2

    def mean_vector(self) -> np.ndarray:
        return np.array([self.mean1, self.mean2], dtype=float)

    def covariance(self) -> np.ndarray:
        off = self.rho * self.sigma1 * self.sigma2
        return np.array([[self.sigma1**2, off], [off, self.sigma2**2]], dtype=float)

    def marginal(self, k: int) -> Gaussian1D:
        if k == 0:
            return Gaussian1D(self.mean1, self.sigma1)
        if k == 1:
            return Gaussian1D(self.mean2, self.sigma2)
        raise DomainError(f"marginal index must be 0 or 1, got {k}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


GaussianRecord = Gaussian1D | Gaussian2DIso | BivariateGaussian


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    """Nonnegative vector; a probability when it sums to one."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("probs must be a nonempty vector")
        if np.any(~np.isfinite(p)) or np.any(p < 0.0):
            raise DomainError("probs must be finite and nonnegative")
        object.__setattr__(self, "probs", p)

    @property
    def is_probability(self) -> bool:
        return abs(float(self.probs.sum()) - 1.0) <= PROB_TOL


@dataclass(frozen=True, eq=False)
class MixtureWeights:
    """Normalized nonnegative weights over candidates or components."""

    w: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float).reshape(-1)
        if w.size == 0 or np.any(~np.isfinite(w)) or np.any(w < 0.0):
            raise DomainError("mixture weights must be finite, nonnegative and nonempty")
        if abs(float(w.sum()) - 1.0) > PROB_TOL * max(1, w.size):
            raise DomainError(f"mixture weights must sum to 1, got {float(w.sum())!r}")
        object.__setattr__(self, "w", w)

    @classmethod
    def uniform(cls, n: int) -> MixtureWeights:
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def one_hot(cls, n: int, index: int) -> MixtureWeights:
        w = np.zeros(n)
        w[index] = 1.0
        return cls(w)

    def __len__(self) -> int:
        return int(self.w.size)

    def to_dict(self) -> dict[str, Any]:
        return {"w": self.w.tolist()}
