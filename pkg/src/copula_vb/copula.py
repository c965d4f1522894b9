"""Copula utilities: quantile transforms, the Gaussian copula and copula-side checks.

Integrals over the unit square use tensor-product Gauss-Legendre quadrature in
logit coordinates ``u = expit(t)``, ``t in [-L, L]``, which keeps the nodes
away from the corners where copula densities diverge.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from scipy.special import expit

from .divergence import kl_gauss
from .errors import DomainError
from .models import BivariateGaussian, Gaussian1D

logger = logging.getLogger(__name__)

DEFAULT_NODES = 256
LOGIT_HALF_WIDTH = 20.0
QUADRATURE_TOL = 1e-4
FRECHET_TOL = 1e-12


class Cdf1D(ABC):
    """Monotone nondecreasing map from the reals to [0, 1]."""

    @abstractmethod
    def cdf(self, x: np.ndarray | float) -> np.ndarray | float: ...

    @abstractmethod
    def pseudo_inverse(self, u: np.ndarray | float) -> np.ndarray | float:
        """inf{x : F(x) >= u}; ``u`` is already validated to lie in [0, 1]."""

    def pdf(self, x: np.ndarray | float) -> np.ndarray | float:
        raise NotImplementedError(f"{type(self).__name__} has no density")


@dataclass(frozen=True)
class UniformCdf(Cdf1D):
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self) -> None:
        if not self.high > self.low:
            raise DomainError(f"empty support [{self.low}, {self.high}]")

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.low) / (self.high - self.low), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.low) & (x <= self.high), 1.0 / (self.high - self.low), 0.0)

    def pseudo_inverse(self, u):
        return self.low + np.asarray(u, dtype=float) * (self.high - self.low)


@dataclass(frozen=True)
class GaussianCdf(Cdf1D):
    mean: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        Gaussian1D(self.mean, self.scale)

    def cdf(self, x):
        return stats.norm.cdf(x, loc=self.mean, scale=self.scale)

    def pdf(self, x):
        return stats.norm.pdf(x, loc=self.mean, scale=self.scale)

    def pseudo_inverse(self, u):
        return stats.norm.ppf(u, loc=self.mean, scale=self.scale)


@dataclass(frozen=True)
class LogNormalCdf(Cdf1D):
    """Law of exp(Y) for Y ~ N(mean, scale^2)."""

    mean: float = 0.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        Gaussian1D(self.mean, self.scale)

    @property
    def _dist(self):
        return stats.lognorm(s=self.scale, scale=np.exp(self.mean))

    def cdf(self, x):
        return self._dist.cdf(x)

    def pdf(self, x):
        return self._dist.pdf(x)

    def pseudo_inverse(self, u):
        return self._dist.ppf(u)


class EmpiricalCdf(Cdf1D):
    """Right-continuous step function with a jump of 1/n at every sorted sample."""

    def __init__(self, samples: Sequence[float] | np.ndarray):
        xs = np.sort(np.asarray(samples, dtype=float).reshape(-1))
        if xs.size == 0 or np.any(~np.isfinite(xs)):
            raise DomainError("empirical CDF needs at least one finite sample")
        self.samples = xs
        self.levels = np.arange(1, xs.size + 1) / xs.size

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.samples.size

    def pseudo_inverse(self, u):
        # u = 0 maps to the smallest sample
        idx = np.searchsorted(self.levels, u, side="left")
        return self.samples[np.minimum(idx, self.samples.size - 1)]


def _check_unit(u: np.ndarray, *, interior: bool) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise DomainError("u must be finite")
    if interior and (np.any(arr <= 0.0) or np.any(arr >= 1.0)):
        raise DomainError("u must lie strictly inside (0, 1)")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("u must lie in [0, 1]")
    return arr


def pseudo_inverse(cdf: Cdf1D, u: np.ndarray | float) -> np.ndarray | float:
    arr = _check_unit(u, interior=False)
    out = cdf.pseudo_inverse(arr)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GaussianCopula:
    rho: float

    def __post_init__(self) -> None:
        BivariateGaussian(1.0, 1.0, self.rho)


def _log_density_z(rho: float, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    one_minus = 1.0 - rho * rho
    quad = rho * rho * (z1 * z1 + z2 * z2) - 2.0 * rho * z1 * z2
    return -0.5 * np.log(one_minus) - quad / (2.0 * one_minus)


def _normal_scores_from_logit(t: np.ndarray) -> np.ndarray:
    # ppf on the smaller tail keeps precision near u = 1
    return np.where(t < 0.0, stats.norm.ppf(expit(t)), -stats.norm.ppf(expit(-t)))


def gaussian_copula_density(cop: GaussianCopula, u: Sequence[float] | np.ndarray) -> np.ndarray | float:
    """Joint normal density over the product of its marginals, at the normal scores of u."""
    arr = _check_unit(u, interior=True)
    if arr.shape[-1] != 2:
        raise DomainError(f"u must have a trailing dimension of 2, got shape {arr.shape}")
    z = stats.norm.ppf(arr)
    out = np.exp(_log_density_z(cop.rho, z[..., 0], z[..., 1]))
    return float(out) if np.ndim(out) == 0 else out


def gaussian_copula_cdf(cop: GaussianCopula, u: Sequence[float] | np.ndarray) -> np.ndarray | float:
    arr = _check_unit(u, interior=False)
    clipped = np.clip(arr, 1e-15, 1.0 - 1e-15)
    z = stats.norm.ppf(clipped)
    mvn = stats.multivariate_normal(mean=[0.0, 0.0], cov=[[1.0, cop.rho], [cop.rho, 1.0]])
    out = np.asarray(mvn.cdf(z), dtype=float)
    # exact values on the boundary of the square
    lo = np.min(arr, axis=-1)
    out = np.where(lo == 0.0, 0.0, out)
    out = np.where(arr[..., 0] == 1.0, arr[..., 1], out)
    out = np.where(arr[..., 1] == 1.0, arr[..., 0], out)
    return float(out) if np.ndim(out) == 0 else out


def sklar_density(
    joint_pdf: Callable[[np.ndarray], np.ndarray],
    marginals: Sequence[Cdf1D],
    u: Sequence[float] | np.ndarray,
) -> np.ndarray | float:
    """Copula density c(u) = f(F<-(u)) / prod_k f_k(F_k<-(u)) for absolutely continuous laws."""
    arr = _check_unit(u, interior=True)
    if arr.shape[-1] != len(marginals):
        raise DomainError(f"u has {arr.shape[-1]} coordinates but {len(marginals)} marginals were given")
    theta = np.stack([m.pseudo_inverse(arr[..., k]) for k, m in enumerate(marginals)], axis=-1)
    denom = np.prod([m.pdf(theta[..., k]) for k, m in enumerate(marginals)], axis=0)
    out = np.asarray(joint_pdf(theta), dtype=float) / denom
    return float(out) if np.ndim(out) == 0 else out


def frechet_hoeffding_check(
    C_values: np.ndarray, u_grid: np.ndarray | None = None, tol: float = FRECHET_TOL
) -> bool:
    """True iff max(0, u1 + u2 - 1) <= C(u) <= min(u1, u2) at every node of the grid."""
    c = np.asarray(C_values, dtype=float)
    if c.ndim != 2:
        raise DomainError("C_values must be a 2-D grid")
    g1 = np.linspace(0.0, 1.0, c.shape[0]) if u_grid is None else np.asarray(u_grid, dtype=float)
    g2 = np.linspace(0.0, 1.0, c.shape[1]) if u_grid is None else np.asarray(u_grid, dtype=float)
    u1, u2 = np.meshgrid(g1, g2, indexing="ij")
    lower = np.maximum(0.0, u1 + u2 - 1.0)
    upper = np.minimum(u1, u2)
    return bool(np.all(c >= lower - tol) and np.all(c <= upper + tol))


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    converged: bool

    def __float__(self) -> float:
        return self.value


def _logit_rule(n: int, half_width: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    t = half_width * x
    jac = expit(t) * expit(-t)
    return t, half_width * w * jac


def _integrate_scores(
    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray], n: int, half_width: float
) -> float:
    """Integrate g(z1, z2) du1 du2 over the unit square where z are the normal scores of u."""
    t, w = _logit_rule(n, half_width)
    z = _normal_scores_from_logit(t)
    z1, z2 = np.meshgrid(z, z, indexing="ij")
    return float(np.einsum("i,ij,j->", w, integrand(z1, z2), w))


def integrate_unit_square(
    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n: int = DEFAULT_NODES,
    *,
    half_width: float = LOGIT_HALF_WIDTH,
    tol: float = QUADRATURE_TOL,
) -> QuadratureResult:
    """Gauss-Legendre in logit coordinates; the error estimate reruns at half resolution."""
    if n < 4:
        raise DomainError(f"quadrature needs at least 4 nodes per axis, got {n}")
    fine = _integrate_scores(integrand, n, half_width)
    coarse = _integrate_scores(integrand, n // 2, half_width)
    err = abs(fine - coarse)
    if err > tol:
        logger.warning("quadrature did not converge: n=%d, error estimate %.3e", n, err)
    return QuadratureResult(fine, err, err <= tol)


def copula_mass(cop: GaussianCopula, quadrature_n: int = DEFAULT_NODES) -> QuadratureResult:
    """Integral of the copula density over the unit square (one up to quadrature error)."""
    return integrate_unit_square(lambda z1, z2: np.exp(_log_density_z(cop.rho, z1, z2)), quadrature_n)


def mutual_info_copula_entropy(cop: GaussianCopula, quadrature_n: int = DEFAULT_NODES) -> QuadratureResult:
    """E_c[log c] over the unit square, the mutual information of any law with this copula."""
    if quadrature_n < 64:
        raise DomainError(f"quadrature_n must be at least 64, got {quadrature_n}")

    def integrand(z1, z2):
        logc = _log_density_z(cop.rho, z1, z2)
        return np.exp(logc) * logc

    return integrate_unit_square(integrand, quadrature_n)


@dataclass(frozen=True)
class CopulaDecomposition:
    kl_total: float
    kl_copula_term: QuadratureResult
    kl_marginal_terms: tuple[float, float]

    @property
    def residual(self) -> float:
        return self.kl_total - self.kl_copula_term.value - sum(self.kl_marginal_terms)


def kl_copula_decomposition_check(
    f: BivariateGaussian, ftilde: BivariateGaussian, quadrature_n: int = DEFAULT_NODES
) -> CopulaDecomposition:
    """Split KL(ftilde||f) into a copula term and the two marginal KLs.

    The copula term integrates c~(u) [log c~(u) - log c(F(F~<-(u)))] over the
    copula coordinates of ftilde; the total is the closed-form Gaussian KL.
    """
    kl_total = kl_gauss(ftilde, f)
    marginal_terms = (
        kl_gauss(ftilde.marginal(0), f.marginal(0)),
        kl_gauss(ftilde.marginal(1), f.marginal(1)),
    )

    def integrand(zt1, zt2):
        log_ct = _log_density_z(ftilde.rho, zt1, zt2)
        z1 = (ftilde.mean1 + ftilde.sigma1 * zt1 - f.mean1) / f.sigma1
        z2 = (ftilde.mean2 + ftilde.sigma2 * zt2 - f.mean2) / f.sigma2
        return np.exp(log_ct) * (log_ct - _log_density_z(f.rho, z1, z2))

    copula_term = integrate_unit_square(integrand, quadrature_n)
    result = CopulaDecomposition(kl_total, copula_term, marginal_terms)
    logger.debug("copula decomposition residual %.3e", result.residual)
    return result
