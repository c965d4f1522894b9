"""Ternary-partition copula variational Bayes for the mixture model.

For an anchor point j the approximation is

    q(l_j) * prod_k q(mu_k | l_j) * prod_{i != j} q(l_i | l_j)

with q(l_j = m) = p_m, q(mu_k | l_j = m) = N(mu_t[k, m], sigma2_t[k, m] I_2)
and q(l_i = k | l_j = m) = W[i, k, m]. Each W[i] is left stochastic and W[j]
is the identity. The forward step refreshes every W[i] (and p) given the
conditional means; the reverse step refreshes the conditional means (and p)
given W. Both steps are exact coordinate maximizations of the same ELBO, so
the trace is monotone.

Aggregation across anchors lives in :func:`scheme_cvb1`, :func:`scheme_cvb2`
and :func:`scheme_cvb3`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.special import logsumexp, softmax, xlogy

from ..augment import mixture_moments, optimal_weights, scores_from_elbos
from ..engine import ConditionalModel, StoppingRule, Trace, delta_within, run
from ..models import MixtureWeights
from .algorithms import ClusteringResult
from .data import DataSet, initial_means, label_indices, one_hot
from .stats import EMPTY_WEIGHT, GmmModel, gaussian_entropy_2d, log_gauss_iso

logger = logging.getLogger(__name__)

FORWARD = "forward"
REVERSE = "reverse"


@dataclass
class CvbStructureState:
    anchor: int
    mu_t: np.ndarray
    sigma2_t: np.ndarray
    W: np.ndarray
    p: np.ndarray
    elbo: float = float("-inf")

    @property
    def sigma_t(self) -> np.ndarray:
        return np.sqrt(self.sigma2_t)

    @property
    def K(self) -> int:
        return int(self.p.size)


class CvbStructureModel(ConditionalModel):
    name = "cvb"

    def __init__(
        self,
        data: DataSet,
        anchor: int,
        model: GmmModel | None = None,
        init_means: np.ndarray | None = None,
        init_sigma2: float = 1.0,
    ):
        if not 0 <= anchor < data.N:
            raise ValueError(f"anchor {anchor} outside 0..{data.N - 1}")
        self.data = data
        self.model = model or GmmModel(data.K)
        K = self.model.K
        means = initial_means(K) if init_means is None else np.array(init_means, dtype=float)
        if means.shape != (K, 2):
            raise ValueError(f"init_means must have shape ({K}, 2), got {means.shape}")
        # conditional factors start identical across m
        mu_t = np.repeat(means[:, None, :], K, axis=1)
        sigma2_t = np.full((K, K), float(init_sigma2))
        W = np.repeat(np.eye(K)[None, :, :], data.N, axis=0)
        self.state = CvbStructureState(anchor, mu_t, sigma2_t, W, np.full(K, 1.0 / K))
        self._others = np.arange(data.N) != anchor
        self._flags: list[str] = []
        self._reverse_elbos: list[float] = []

    @property
    def slot_schedule(self) -> Sequence[str]:
        return (FORWARD, REVERSE)

    def _log_omega(self) -> np.ndarray:
        """log N(x_i; mu_t[k, m], I_2) - sigma2_t[k, m], shape (N, K, m)."""
        st = self.state
        return np.moveaxis(log_gauss_iso(self.data.points, st.mu_t), -1, 0) - st.sigma2_t[None, :, :]

    def _per_structure_elbo(self, log_omega: np.ndarray) -> np.ndarray:
        """ELBO of each conditional structure l_j = m, shape (K,)."""
        st = self.state
        W = st.W[self._others]
        factor = gaussian_entropy_2d(st.sigma2_t) + self.model.prior_log_density(st.mu_t, st.sigma2_t)
        cross = np.einsum("ikm,ikm->m", W, log_omega[self._others]) - np.sum(xlogy(W, W), axis=(0, 1))
        anchor_term = np.diagonal(log_omega[st.anchor])
        return factor.sum(axis=0) + cross + anchor_term

    def _refresh_p(self, log_omega: np.ndarray) -> float:
        bracket = self._per_structure_elbo(log_omega)
        self.state.p = softmax(bracket)
        self.state.elbo = float(logsumexp(bracket))
        return self.state.elbo

    def forward(self) -> float:
        log_omega = self._log_omega()
        W = softmax(log_omega, axis=1)
        W[self.state.anchor] = np.eye(self.model.K)
        self.state.W = W
        return self._refresh_p(log_omega)

    def reverse(self) -> float:
        st = self.state
        pts = self.data.points
        n = st.W.sum(axis=0)
        s = np.einsum("ikm,id->kmd", st.W, pts)
        lam = n + self.model.prior_precision
        keep = lam <= EMPTY_WEIGHT
        if np.any(keep):
            self._flags.append("empty-transition")
            logger.debug("cvb anchor %d: keeping %d empty conditional factors", st.anchor, int(keep.sum()))
        safe = np.where(keep, 1.0, lam)
        st.mu_t = np.where(keep[..., None], st.mu_t, s / safe[..., None])
        st.sigma2_t = np.where(keep, st.sigma2_t, 1.0 / safe)
        elbo = self._refresh_p(self._log_omega())
        self._reverse_elbos.append(elbo)
        return elbo

    def update_marginal(self, slot: str) -> float:
        return self.forward() if slot == FORWARD else self.reverse()

    def converged(self, trace: Trace, rule: StoppingRule) -> bool:
        if trace.entries[-1].slot != REVERSE or len(self._reverse_elbos) < 2:
            return False
        return delta_within(self._reverse_elbos[-1] - self._reverse_elbos[-2], rule)

    def snapshot(self) -> dict[str, Any]:
        st = self.state
        return {"mu_t": st.mu_t.copy(), "sigma2_t": st.sigma2_t.copy(), "W": st.W.copy(), "p": st.p.copy()}

    def pop_flags(self) -> tuple[str, ...]:
        flags, self._flags = tuple(self._flags), []
        return flags


def cvb_run(
    data: DataSet,
    anchor: int,
    init_means: np.ndarray | None = None,
    rule: StoppingRule | None = None,
    model: GmmModel | None = None,
    *,
    keep_snapshots: bool = False,
) -> tuple[CvbStructureState, Trace]:
    cvb = CvbStructureModel(data, anchor, model, init_means)
    trace = run(cvb, rule, keep_snapshots=keep_snapshots)
    trace.model = f"cvb[j={anchor}]"
    return cvb.state, trace


def cvb_marginal_estimates(state: CvbStructureState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(means estimate, K x N label marginals, K x N hard labels) implied by one structure."""
    means = np.einsum("m,kmd->kd", state.p, state.mu_t)
    q = np.einsum("ikm,m->ki", state.W, state.p)
    return means, q, one_hot(label_indices(q), state.K)


@dataclass
class CvbStructure:
    state: CvbStructureState
    trace: Trace
    means: np.ndarray
    label_marginals: np.ndarray

    @property
    def anchor(self) -> int:
        return self.state.anchor

    @property
    def elbo(self) -> float:
        return self.state.elbo


def select_anchors(N: int, subsample: int | None, rng: np.random.Generator | None = None) -> np.ndarray:
    """All anchors, or the first ``subsample`` entries of a seeded permutation (sorted)."""
    if subsample is None or subsample >= N:
        return np.arange(N)
    if subsample < 1:
        raise ValueError(f"anchor subsample must be positive, got {subsample}")
    rng = rng or np.random.default_rng(0)
    return np.sort(rng.permutation(N)[:subsample])


def run_structures(
    data: DataSet,
    anchors: Sequence[int] | np.ndarray | None = None,
    init_means: np.ndarray | None = None,
    rule: StoppingRule | None = None,
    model: GmmModel | None = None,
) -> list[CvbStructure]:
    anchors = np.arange(data.N) if anchors is None else anchors
    out: list[CvbStructure] = []
    for j in anchors:
        state, trace = cvb_run(data, int(j), init_means, rule, model)
        means, q, _ = cvb_marginal_estimates(state)
        out.append(CvbStructure(state, trace, means, q))
    return out


def _summary(structures: Sequence[CvbStructure]) -> tuple[float, bool]:
    iters = float(np.mean([s.trace.n_iterations for s in structures]))
    return iters, any(s.trace.truncated for s in structures)


def scheme_cvb1(structures: Sequence[CvbStructure]) -> ClusteringResult:
    """Uniform average of the means; anchored points take their own anchor's label.

    Points that anchor no structure use the uniform average of their label
    marginals. The reported ELBO (mean of per-structure ELBOs) is heuristic.
    """
    if not structures:
        raise ValueError("no CVB structures")
    K = structures[0].state.K
    weights = MixtureWeights.uniform(len(structures))
    means = mixture_moments([s.means for s in structures], weights)
    averaged = np.mean([s.label_marginals for s in structures], axis=0)
    idx = label_indices(averaged)
    for s in structures:
        idx[s.anchor] = int(np.argmax(s.state.p))
    iters, truncated = _summary(structures)
    return ClusteringResult(
        algorithm="cvb1",
        means=means,
        labels=one_hot(idx, K),
        elbo_final=float(np.mean([s.elbo for s in structures])),
        iterations=iters,
        truncated=truncated,
        heuristic_elbo=True,
        weights=weights.w,
    )


def scheme_cvb2(structures: Sequence[CvbStructure]) -> ClusteringResult:
    """The single structure with the highest ELBO (lowest anchor position on ties)."""
    if not structures:
        raise ValueError("no CVB structures")
    elbos = np.array([s.elbo for s in structures])
    best = int(np.argmax(elbos))
    chosen = structures[best]
    iters, truncated = _summary(structures)
    return ClusteringResult(
        algorithm="cvb2",
        means=chosen.means.copy(),
        labels=one_hot(label_indices(chosen.label_marginals), chosen.state.K),
        elbo_final=float(elbos[best]),
        iterations=iters,
        truncated=truncated,
        weights=MixtureWeights.one_hot(len(structures), best).w,
        extras={"anchor": chosen.anchor},
    )


def scheme_cvb3(structures: Sequence[CvbStructure]) -> ClusteringResult:
    """Augmented mixture of structures with weights q_j proportional to exp(ELBO_j)."""
    if not structures:
        raise ValueError("no CVB structures")
    elbos = [s.elbo for s in structures]
    weights = optimal_weights(scores_from_elbos(elbos))
    means = mixture_moments([s.means for s in structures], weights)
    marginals = mixture_moments([s.label_marginals for s in structures], weights)
    iters, truncated = _summary(structures)
    return ClusteringResult(
        algorithm="cvb3",
        means=means,
        labels=one_hot(label_indices(marginals), structures[0].state.K),
        elbo_final=float(np.dot(weights.w, elbos)),
        iterations=iters,
        truncated=truncated,
        heuristic_elbo=True,
        weights=weights.w,
    )
