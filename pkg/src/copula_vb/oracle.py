"""Exact posterior of tiny mixture instances by enumerating every labelling.

Each labelling L contributes log f(L, X) = sum_k log gamma_k(L), with the
cluster means integrated out under their N(0, s^2 I_2) prior and the same
-log(zeta K^N) constant dropped as in :mod:`copula_vb.gmm`. Labellings are
generated in blocks as base-K digit arrays, and sufficient statistics are
accumulated per block with matrix products.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, InstanceTooLargeError
from .gmm.data import DataSet, label_indices
from .gmm.stats import LOG_2PI, GmmModel

logger = logging.getLogger(__name__)

MAX_LABELLINGS = 2**20
BLOCK = 2**14


@dataclass(frozen=True, eq=False)
class ExactPosterior:
    log_evidence: float
    label_marginals: np.ndarray
    mean_posterior: np.ndarray
    map_labels: np.ndarray
    map_log_joint: float
    co_assignment: np.ndarray
    model: GmmModel
    points: np.ndarray

    def log_joint(self, labels: np.ndarray) -> float:
        """log f(L, X) for a K x N hard label matrix or a length-N index vector."""
        idx = np.asarray(labels)
        if idx.ndim == 2:
            idx = label_indices(idx)
        return float(_log_joint_block(idx[None, :], self.points, self.model)[0])


def _digits(start: int, stop: int, N: int, K: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    powers = K ** np.arange(N - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] // powers[None, :]) % K


def _block_stats(labels: np.ndarray, points: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    onehot = (labels[:, :, None] == np.arange(K)).astype(float)
    n = onehot.sum(axis=1)
    s = np.einsum("bnk,nd->bkd", onehot, points)
    q = np.einsum("bnk,n->bk", onehot, np.sum(points * points, axis=1))
    return onehot, n, s, q


def _log_joint_block(labels: np.ndarray, points: np.ndarray, model: GmmModel) -> np.ndarray:
    _, n, s, q = _block_stats(labels, points, model.K)
    lam = n + model.prior_precision
    log_gamma = np.log(2.0 * np.pi / lam) - n * LOG_2PI - 0.5 * (q - np.sum(s * s, axis=-1) / lam)
    return log_gamma.sum(axis=1)


def enumerate_posterior(data: DataSet | np.ndarray, K: int, prior_scale: float = 10.0) -> ExactPosterior:
    points = data.points if isinstance(data, DataSet) else np.asarray(data, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise DomainError(f"points must have shape (N, 2), got {points.shape}")
    if prior_scale is None or not np.isfinite(prior_scale):
        raise DomainError("exact enumeration needs a finite prior_scale; the flat prior has infinite evidence")
    model = GmmModel(K, prior_scale)
    N = points.shape[0]
    total = K**N
    if total > MAX_LABELLINGS:
        raise InstanceTooLargeError(f"K^N = {K}^{N} = {total} labellings exceeds the limit of 2^20")

    log_joint = np.empty(total)
    for start in range(0, total, BLOCK):
        stop = min(start + BLOCK, total)
        log_joint[start:stop] = _log_joint_block(_digits(start, stop, N, K), points, model)
    log_evidence = float(logsumexp(log_joint))

    marginals = np.zeros((K, N))
    mean_post = np.zeros((K, 2))
    co = np.zeros((N, N))
    for start in range(0, total, BLOCK):
        stop = min(start + BLOCK, total)
        labels = _digits(start, stop, N, K)
        w = np.exp(log_joint[start:stop] - log_evidence)
        onehot, n, s, _ = _block_stats(labels, points, K)
        marginals += np.einsum("b,bnk->kn", w, onehot)
        mean_post += np.einsum("b,bkd->kd", w, s / (n + model.prior_precision)[..., None])
        co += np.einsum("b,bnk,bmk->nm", w, onehot, onehot)

    best = int(np.argmax(log_joint))
    map_labels = _digits(best, best + 1, N, K)[0]
    map_onehot = map_labels[None, :] == np.arange(K)[:, None]
    logger.debug("enumerated %d labellings, log evidence %.6f", total, log_evidence)
    return ExactPosterior(
        log_evidence=log_evidence,
        label_marginals=marginals,
        mean_posterior=mean_post,
        map_labels=map_onehot,
        map_log_joint=float(log_joint[best]),
        co_assignment=co,
        model=model,
        points=points,
    )
