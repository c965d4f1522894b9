"""Augmented-mixture combiner over candidate approximations.

A candidate i with prior weight p_i and divergence KL_i to the target gets the
optimal mixture weight w_i proportional to p_i exp(-KL_i). In Bayesian use the
KLs are replaced by negative ELBOs: the shared log f(x) shifts every score by
the same constant, and the softmax is invariant to that shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import DomainError, NoValidMixtureError
from .models import MixtureWeights


@dataclass(frozen=True)
class CandidateScore:
    kl_or_neg_elbo: float
    prior_weight: float = 1.0

    def __post_init__(self) -> None:
        if math.isnan(self.kl_or_neg_elbo) or self.kl_or_neg_elbo == -math.inf:
            raise DomainError(f"score must be a real number or +inf, got {self.kl_or_neg_elbo!r}")
        if not (math.isfinite(self.prior_weight) and self.prior_weight >= 0.0):
            raise DomainError(f"prior_weight must be finite and nonnegative, got {self.prior_weight!r}")


def scores_from_elbos(elbos: Sequence[float], priors: Sequence[float] | None = None) -> list[CandidateScore]:
    n = len(elbos)
    priors = [1.0 / n] * n if priors is None else list(priors)
    if len(priors) != n:
        raise DomainError(f"{n} ELBOs but {len(priors)} prior weights")
    return [CandidateScore(-float(e), float(p)) for e, p in zip(elbos, priors)]


def _arrays(scores: Sequence[CandidateScore]) -> tuple[np.ndarray, np.ndarray]:
    if len(scores) == 0:
        raise DomainError("no candidates")
    kl = np.array([s.kl_or_neg_elbo for s in scores], dtype=float)
    prior = np.array([s.prior_weight for s in scores], dtype=float)
    total = prior.sum()
    if not total > 0.0:
        raise DomainError("prior weights must not all be zero")
    return kl, prior / total


def _log_unnormalized(kl: np.ndarray, prior: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior)
    return np.where(np.isinf(kl) | (prior == 0.0), -np.inf, log_prior - np.where(np.isinf(kl), 0.0, kl))


def optimal_weights(scores: Sequence[CandidateScore]) -> MixtureWeights:
    """w_i proportional to p_i exp(-KL_i), normalized in the log domain."""
    kl, prior = _arrays(scores)
    logits = _log_unnormalized(kl, prior)
    if not np.any(np.isfinite(logits)):
        raise NoValidMixtureError("every candidate has infinite score or zero prior weight")
    return MixtureWeights(softmax(logits))


def kl_upper_bound(scores: Sequence[CandidateScore], weights: MixtureWeights) -> float:
    """sum_i w_i KL_i + sum_i w_i log(w_i / p_i).

    At the optimal weights this equals -log sum_i p_i exp(-KL_i). Candidates
    with zero weight contribute nothing.
    """
    kl, prior = _arrays(scores)
    w = weights.w
    if w.size != kl.size:
        raise DomainError(f"{kl.size} candidates but {w.size} weights")
    used = w > 0.0
    if np.any(np.isinf(kl[used])) or np.any(prior[used] == 0.0):
        return math.inf
    return float(np.sum(w[used] * (kl[used] + np.log(w[used]) - np.log(prior[used]))))


def optimal_bound(scores: Sequence[CandidateScore]) -> float:
    """-log sum_i p_i exp(-KL_i), the bound attained by the optimal weights."""
    kl, prior = _arrays(scores)
    logits = _log_unnormalized(kl, prior)
    if not np.any(np.isfinite(logits)):
        return math.inf
    return float(-logsumexp(logits))


def min_candidate_bound(scores: Sequence[CandidateScore]) -> tuple[int, float]:
    """Best one-hot mixture: index and value of min_i (KL_i - log p_i)."""
    kl, prior = _arrays(scores)
    logits = _log_unnormalized(kl, prior)
    best = int(np.argmax(logits))
    return best, float(-logits[best])


def mixture_moments(component_moments: Sequence[np.ndarray] | np.ndarray, weights: MixtureWeights) -> np.ndarray:
    moments = np.asarray(component_moments, dtype=float)
    if moments.shape[0] != len(weights):
        raise DomainError(f"{moments.shape[0]} components but {len(weights)} weights")
    return np.tensordot(weights.w, moments, axes=1)
