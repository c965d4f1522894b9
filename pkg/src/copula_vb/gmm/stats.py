"""Isotropic Gaussian-mixture model and its per-cluster posterior statistics.

Every cluster density is N(mu_k, I_2), labels are uniform over K clusters and
each mean has either a flat prior or an isotropic N(0, s^2 I_2) prior. The
constant -log(zeta K^N) of the joint density is dropped everywhere, so ELBOs
and evidences are reported modulo the same additive constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

LOG_2PI = math.log(2.0 * math.pi)
EMPTY_WEIGHT = 1e-300


@dataclass(frozen=True)
class GmmModel:
    K: int
    prior_scale: float | None = None

    def __post_init__(self) -> None:
        if self.K < 1:
            raise DomainError(f"K must be positive, got {self.K}")
        if self.prior_scale is not None and not (math.isfinite(self.prior_scale) and self.prior_scale > 0):
            raise DomainError(f"prior_scale must be a finite positive number or None, got {self.prior_scale!r}")

    @property
    def is_flat(self) -> bool:
        return self.prior_scale is None

    @property
    def prior_precision(self) -> float:
        return 0.0 if self.prior_scale is None else 1.0 / self.prior_scale**2

    def prior_log_density(self, means: np.ndarray, sigma2: np.ndarray | float = 0.0) -> np.ndarray:
        """E[-||mu||^2 / (2 s^2)] under N(means, sigma2 I_2); zero under the flat prior."""
        if self.prior_scale is None:
            return np.zeros(np.shape(means)[:-1])
        sq = np.sum(np.asarray(means) ** 2, axis=-1) + 2.0 * np.asarray(sigma2)
        return -0.5 * self.prior_precision * sq


def log_gauss_iso(points: np.ndarray, means: np.ndarray) -> np.ndarray:
    """log N(x_i; mu, I_2) for every mean in ``means[..., 2]`` and every point; shape (..., N)."""
    diff = np.asarray(means)[..., None, :] - points
    return -LOG_2PI - 0.5 * np.sum(diff * diff, axis=-1)


def gaussian_entropy_2d(sigma2: np.ndarray) -> np.ndarray:
    """Differential entropy of N(., sigma2 I_2)."""
    return np.log(2.0 * math.pi * math.e * np.asarray(sigma2))


@dataclass(frozen=True, eq=False)
class ClusterStats:
    """Posterior statistics of each cluster mean under a labelling.

    ``empty`` marks clusters with no weight under the flat prior; their
    ``mu_bar`` is NaN and ``log_gamma`` is +inf (the improper integral), and
    callers keep their previous factors.
    """

    weight: np.ndarray
    mu_bar: np.ndarray
    sigma_bar: np.ndarray
    log_gamma: np.ndarray
    empty: np.ndarray

    @property
    def sigma2_bar(self) -> np.ndarray:
        return self.sigma_bar**2

    @property
    def any_empty(self) -> bool:
        return bool(np.any(self.empty))


def posterior_stats(points: np.ndarray, weights: np.ndarray, model: GmmModel | None = None) -> ClusterStats:
    """Gaussian posterior of each mean given K x N (hard or soft) label weights.

    With precision lam_k = sum_i w_ki + 1/s^2: mu_bar_k = sum_i w_ki x_i / lam_k,
    sigma_bar_k = lam_k^(-1/2), and log_gamma_k is the log of the integral over
    mu_k of prod_i N(x_i; mu_k, I_2)^w_ki times the prior kernel.
    """
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[1] != pts.shape[0]:
        raise DomainError(f"weights must have shape (K, {pts.shape[0]}), got {w.shape}")
    prior_precision = 0.0 if model is None else model.prior_precision

    n = w.sum(axis=1)
    s = w @ pts
    q = w @ np.sum(pts * pts, axis=1)
    lam = n + prior_precision
    empty = lam <= EMPTY_WEIGHT
    safe = np.where(empty, 1.0, lam)

    mu_bar = np.where(empty[:, None], np.nan, s / safe[:, None])
    sigma_bar = np.where(empty, np.inf, 1.0 / np.sqrt(safe))
    log_gamma = np.log(2.0 * math.pi / safe) - n * LOG_2PI - 0.5 * (q - np.sum(s * s, axis=1) / safe)
    log_gamma = np.where(empty, np.inf, log_gamma)
    return ClusterStats(n, mu_bar, sigma_bar, log_gamma, empty)
