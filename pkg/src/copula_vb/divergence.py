"""Bregman divergences, discrete and Gaussian KL, and the variance/mixture theorems.

Everything here is a pure function of its inputs. The KL divergence is the
Bregman divergence generated by the negative entropy, and the squared
Euclidean distance is the one generated by the squared norm; both potentials
are members of the closed :class:`Potential` enumeration so their gradients
stay testable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .errors import DomainError
from .models import (
    BivariateGaussian,
    DiscreteDist,
    Gaussian1D,
    Gaussian2DIso,
    GaussianRecord,
    MixtureWeights,
)

__all__ = [
    "Potential",
    "KLResult",
    "DiscreteDist",
    "Gaussian1D",
    "Gaussian2DIso",
    "BivariateGaussian",
    "bregman",
    "three_point_residual",
    "bregman_variance",
    "bregman_variance_about",
    "mixture_minimizer",
    "mixture_is_minimizer_check",
    "kl_discrete",
    "kl_gauss",
    "posterior_mean_mse_check",
]

logger = logging.getLogger(__name__)

ZERO_GUARD = 1e-300
MINIMIZER_RTOL = 1e-12


class Potential(str, Enum):
    SQUARED_NORM = "squared-norm"
    NEGATIVE_ENTROPY = "negative-entropy"

    def check_domain(self, x: np.ndarray, *, strict: bool = False) -> np.ndarray:
        """Validate ``x`` and return it as a float array.

        Under the negative entropy, ``strict`` requires every coordinate to be
        positive (needed wherever the gradient is evaluated); otherwise
        coordinates below ``ZERO_GUARD`` are treated as exact zeros.
        """
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(~np.isfinite(arr)):
            raise DomainError(f"{self.value}: non-finite coordinate in {arr!r}")
        if self is Potential.NEGATIVE_ENTROPY:
            if np.any(arr < 0.0):
                raise DomainError(f"{self.value}: negative coordinate in {arr!r}")
            arr = np.where(arr < ZERO_GUARD, 0.0, arr)
            if strict and np.any(arr == 0.0):
                raise DomainError(f"{self.value}: gradient undefined at zero coordinate in {arr!r}")
        return arr

    def value(self, x: np.ndarray) -> float:
        arr = self.check_domain(x)
        if self is Potential.SQUARED_NORM:
            return float(np.dot(arr, arr))
        return float(np.sum(xlogy(arr, arr)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        arr = self.check_domain(x, strict=True)
        if self is Potential.SQUARED_NORM:
            return 2.0 * arr
        return np.log(arr) + 1.0


@dataclass(frozen=True)
class KLResult:
    """KL value with a flag for absolute-continuity failure (value is +inf)."""

    value: float
    support_violation: bool = False

    def __float__(self) -> float:
        return self.value


def _same_shape(*arrays: np.ndarray) -> None:
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise DomainError(f"dimension mismatch: {sorted(shapes)}")


def bregman(phi: Potential, alpha: np.ndarray, beta: np.ndarray) -> float:
    a = phi.check_domain(alpha)
    b = phi.check_domain(beta, strict=True)
    _same_shape(a, b)
    d = phi.value(a) - phi.value(b) - float(np.dot(a - b, phi.gradient(b)))
    # rounding can leave a tiny negative value
    return max(d, 0.0)


def three_point_residual(phi: Potential, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """D(a||b) + D(b||c) - D(a||c) - <b - a, grad(b) - grad(c)>; identically zero."""
    a = phi.check_domain(a)
    b = phi.check_domain(b, strict=True)
    c = phi.check_domain(c, strict=True)
    _same_shape(a, b, c)
    return (
        bregman(phi, a, b)
        + bregman(phi, b, c)
        - bregman(phi, a, c)
        - float(np.dot(b - a, phi.gradient(b) - phi.gradient(c)))
    )


def _points_and_weights(
    points: Sequence[np.ndarray] | np.ndarray, weights: MixtureWeights | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise DomainError("empty point set")
    if pts.ndim == 1:
        pts = pts[:, None]
    w = weights.w if isinstance(weights, MixtureWeights) else MixtureWeights(weights).w
    if w.size != pts.shape[0]:
        raise DomainError(f"{pts.shape[0]} points but {w.size} weights")
    return pts, w


def bregman_variance(
    phi: Potential, points: Sequence[np.ndarray] | np.ndarray, weights: MixtureWeights | np.ndarray
) -> float:
    """E[phi(x)] - phi(E[x]), the Bregman information of the weighted points."""
    pts, w = _points_and_weights(points, weights)
    mean = w @ pts
    expected = float(sum(wi * phi.value(x) for wi, x in zip(w, pts)))
    return max(expected - phi.value(mean), 0.0)


def bregman_variance_about(
    phi: Potential,
    points: Sequence[np.ndarray] | np.ndarray,
    weights: MixtureWeights | np.ndarray,
    x_tilde: np.ndarray,
) -> float:
    """sum_i p_i D(x_i||x~) - D(E[x]||x~); equals the variance for any fixed x~."""
    pts, w = _points_and_weights(points, weights)
    ref = np.atleast_1d(np.asarray(x_tilde, dtype=float))
    mean = w @ pts
    spread = float(sum(wi * bregman(phi, x, ref) for wi, x in zip(w, pts)))
    return spread - bregman(phi, mean, ref)


def _mixture_objective(phi: Potential, pts: np.ndarray, w: np.ndarray, candidate: np.ndarray) -> float:
    return float(sum(wi * bregman(phi, x, candidate) for wi, x in zip(w, pts) if wi > 0.0))


def mixture_minimizer(
    phi: Potential,
    points: Sequence[np.ndarray] | np.ndarray,
    weights: MixtureWeights | np.ndarray,
    candidates: Sequence[np.ndarray] | np.ndarray,
) -> tuple[int, np.ndarray]:
    """Index and value of the candidate minimizing sum_i p_i D(x_i||c); lowest index on ties."""
    pts, w = _points_and_weights(points, weights)
    cands = np.asarray(candidates, dtype=float)
    if cands.ndim == 1:
        cands = cands[:, None]
    if cands.shape[0] == 0:
        raise DomainError("empty candidate set")
    objective = np.array([_mixture_objective(phi, pts, w, c) for c in cands])
    best = int(np.argmin(objective))
    return best, cands[best]


def mixture_is_minimizer_check(
    phi: Potential,
    points: Sequence[np.ndarray] | np.ndarray,
    weights: MixtureWeights | np.ndarray,
    candidates: Sequence[np.ndarray] | np.ndarray,
) -> bool:
    """True iff E[x] attains the minimum of sum_i p_i D(x_i||.) over the candidates."""
    pts, w = _points_and_weights(points, weights)
    cands = np.asarray(candidates, dtype=float)
    if cands.ndim == 1:
        cands = cands[:, None]
    mean = w @ pts
    at_mean = _mixture_objective(phi, pts, w, mean)
    best = min(_mixture_objective(phi, pts, w, c) for c in cands)
    return at_mean <= best + MINIMIZER_RTOL * max(1.0, abs(best))


def kl_discrete(p: DiscreteDist | np.ndarray, q: DiscreteDist | np.ndarray) -> KLResult:
    """sum p log(p/q) with 0 log 0 = 0; +inf flagged when q misses p's support."""
    pv = (p if isinstance(p, DiscreteDist) else DiscreteDist(p)).probs
    qv = (q if isinstance(q, DiscreteDist) else DiscreteDist(q)).probs
    _same_shape(pv, qv)
    pv = np.where(pv < ZERO_GUARD, 0.0, pv)
    qv = np.where(qv < ZERO_GUARD, 0.0, qv)
    support = pv > 0.0
    if np.any(qv[support] == 0.0):
        logger.debug("kl_discrete: support violation, returning +inf")
        return KLResult(float("inf"), support_violation=True)
    value = float(np.sum(xlogy(pv, pv)) - np.sum(pv[support] * np.log(qv[support])))
    # extended KL for unnormalized vectors
    value += float(qv.sum() - pv.sum())
    return KLResult(max(value, 0.0))


def _moments(g: GaussianRecord) -> tuple[np.ndarray, np.ndarray]:
    return g.mean_vector(), g.covariance()


def kl_gauss(p: GaussianRecord, q: GaussianRecord) -> float:
    """Closed-form KL(p||q) for Gaussian records of equal dimension."""
    mp, sp = _moments(p)
    mq, sq = _moments(q)
    if mp.shape != mq.shape:
        raise DomainError(f"dimension mismatch: {mp.size} vs {mq.size}")
    d = mp.size
    sq_inv = np.linalg.inv(sq)
    diff = mq - mp
    _, logdet_p = np.linalg.slogdet(sp)
    _, logdet_q = np.linalg.slogdet(sq)
    value = 0.5 * (np.trace(sq_inv @ sp) + diff @ sq_inv @ diff - d + logdet_q - logdet_p)
    return max(float(value), 0.0)


def posterior_mean_mse_check(
    samples: Sequence[tuple[np.ndarray | float, float]], candidates: Sequence[np.ndarray] | np.ndarray
) -> bool:
    """True iff the weighted mean has the least weighted squared error among the candidates."""
    if len(samples) == 0:
        raise DomainError("empty sample set")
    thetas = np.array([np.atleast_1d(np.asarray(t, dtype=float)) for t, _ in samples])
    weights = np.array([w for _, w in samples], dtype=float)
    return mixture_is_minimizer_check(Potential.SQUARED_NORM, thetas, weights, candidates)
