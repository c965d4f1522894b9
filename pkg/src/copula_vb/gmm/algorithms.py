"""Mean-field algorithm family over the mixture model: k-means/ICM, EM1, EM2 and VB.

All four alternate a label slot and a means slot. They differ only in which
factor is restricted to a point mass:

========  ===============  ===============
name      labels           means
========  ===============  ===============
kmeans    hard (Dirac)     Dirac
em1       hard (Dirac)     Gaussian
em2       soft             Dirac
vb        soft             Gaussian
========  ===============  ===============

The ELBO is E_q log f(X, Y, L) + H(q) of the factors actually held. Point
masses on the means contribute no entropy term, which makes the k-means value
the plug-in log f(X, Y^, L^).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import softmax, xlogy

from ..engine import ConditionalModel, StoppingRule, Trace, delta_within, run
from .data import DataSet, initial_means, label_indices, one_hot
from .stats import GmmModel, gaussian_entropy_2d, log_gauss_iso, posterior_stats

logger = logging.getLogger(__name__)

LABELS = "labels"
MEANS = "means"


@dataclass
class ClusteringResult:
    algorithm: str
    means: np.ndarray
    labels: np.ndarray
    elbo_final: float
    iterations: float
    truncated: bool = False
    heuristic_elbo: bool = False
    trace: Trace | None = None
    responsibilities: np.ndarray | None = None
    sigma2: np.ndarray | None = None
    weights: np.ndarray | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def label_indices(self) -> np.ndarray:
        return label_indices(self.labels)


class MeanFieldModel(ConditionalModel):
    hard_labels: bool = False
    gaussian_means: bool = True

    def __init__(
        self,
        data: DataSet,
        model: GmmModel | None = None,
        init_means: np.ndarray | None = None,
        init_sigma2: float | np.ndarray = 1.0,
    ):
        self.data = data
        self.model = model or GmmModel(data.K)
        K = self.model.K
        means = initial_means(K) if init_means is None else np.array(init_means, dtype=float)
        if means.shape != (K, 2):
            raise ValueError(f"init_means must have shape ({K}, 2), got {means.shape}")
        self.means = means
        self.sigma2 = np.broadcast_to(np.asarray(init_sigma2, dtype=float), (K,)).copy()
        if not self.gaussian_means:
            self.sigma2[:] = 0.0
        self.resp: np.ndarray | None = None
        self._labels_unchanged = False
        self._flags: list[str] = []

    @property
    def slot_schedule(self) -> Sequence[str]:
        return (LABELS, MEANS)

    def label_scores(self) -> np.ndarray:
        scores = log_gauss_iso(self.data.points, self.means)
        if self.gaussian_means:
            scores = scores - self.sigma2[:, None]
        return scores

    def update_labels(self) -> None:
        scores = self.label_scores()
        previous = self.resp
        if self.hard_labels:
            self.resp = one_hot(np.argmax(scores, axis=0), self.model.K).astype(float)
            self._labels_unchanged = previous is not None and np.array_equal(previous, self.resp)
        else:
            self.resp = softmax(scores, axis=0)

    def update_means(self) -> None:
        stats = posterior_stats(self.data.points, self.resp, self.model)
        keep = stats.empty
        if np.any(keep):
            self._flags.append("empty-cluster")
            logger.debug("%s: keeping factors of empty clusters %s", self.name, np.flatnonzero(keep).tolist())
        self.means = np.where(keep[:, None], self.means, np.nan_to_num(stats.mu_bar))
        if self.gaussian_means:
            self.sigma2 = np.where(keep, self.sigma2, stats.sigma2_bar)

    def update_marginal(self, slot: str) -> float:
        if slot == LABELS:
            self.update_labels()
        else:
            self.update_means()
        return self.elbo()

    def elbo(self) -> float:
        scores = self.label_scores()
        value = float(np.sum(self.resp * scores))
        value += float(np.sum(self.model.prior_log_density(self.means, self.sigma2)))
        if self.gaussian_means:
            value += float(np.sum(gaussian_entropy_2d(self.sigma2)))
        if not self.hard_labels:
            value -= float(np.sum(xlogy(self.resp, self.resp)))
        return value

    def converged(self, trace: Trace, rule: StoppingRule) -> bool:
        last = trace.entries[-1]
        if self.hard_labels:
            return last.slot == LABELS and self._labels_unchanged and delta_within(last.delta, rule)
        return super().converged(trace, rule)

    def snapshot(self) -> dict[str, Any]:
        return {
            "means": self.means.copy(),
            "sigma2": self.sigma2.copy(),
            "resp": None if self.resp is None else self.resp.copy(),
        }

    def pop_flags(self) -> tuple[str, ...]:
        flags, self._flags = tuple(self._flags), []
        return flags

    def result(self, trace: Trace) -> ClusteringResult:
        return ClusteringResult(
            algorithm=self.name,
            means=self.means.copy(),
            labels=one_hot(label_indices(self.resp), self.model.K),
            elbo_final=trace.final_elbo,
            iterations=float(trace.n_iterations),
            truncated=trace.truncated,
            trace=trace,
            responsibilities=self.resp.copy(),
            sigma2=self.sigma2.copy() if self.gaussian_means else None,
        )


class KMeansModel(MeanFieldModel):
    """ICM on the isotropic mixture: nearest-mean labels, cluster-mean updates."""

    name = "kmeans"
    hard_labels = True
    gaussian_means = False


class Em1Model(MeanFieldModel):
    """Hard labels with the variance penalty argmax_k N(x_i; mu_k, I) / exp(sigma_k^2)."""

    name = "em1"
    hard_labels = True
    gaussian_means = True


class Em2Model(MeanFieldModel):
    name = "em2"
    hard_labels = False
    gaussian_means = False


class VbModel(MeanFieldModel):
    name = "vb"
    hard_labels = False
    gaussian_means = True


def _fit(
    cls: type[MeanFieldModel],
    data: DataSet,
    init_means: np.ndarray | None,
    rule: StoppingRule | None,
    model: GmmModel | None,
    keep_snapshots: bool,
) -> ClusteringResult:
    mf = cls(data, model, init_means)
    trace = run(mf, rule, keep_snapshots=keep_snapshots)
    return mf.result(trace)


def kmeans_run(
    data: DataSet,
    init_means: np.ndarray | None = None,
    rule: StoppingRule | None = None,
    model: GmmModel | None = None,
    *,
    keep_snapshots: bool = False,
) -> ClusteringResult:
    return _fit(KMeansModel, data, init_means, rule, model, keep_snapshots)


def em1_run(
    data: DataSet,
    init_means: np.ndarray | None = None,
    rule: StoppingRule | None = None,
    model: GmmModel | None = None,
    *,
    keep_snapshots: bool = False,
) -> ClusteringResult:
    return _fit(Em1Model, data, init_means, rule, model, keep_snapshots)


def em2_run(
    data: DataSet,
    init_means: np.ndarray | None = None,
    rule: StoppingRule | None = None,
    model: GmmModel | None = None,
    *,
    keep_snapshots: bool = False,
) -> ClusteringResult:
    return _fit(Em2Model, data, init_means, rule, model, keep_snapshots)


def vb_run(
    data: DataSet,
    init_means: np.ndarray | None = None,
    rule: StoppingRule | None = None,
    model: GmmModel | None = None,
    *,
    keep_snapshots: bool = False,
) -> ClusteringResult:
    return _fit(VbModel, data, init_means, rule, model, keep_snapshots)
