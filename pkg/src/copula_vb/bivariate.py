"""Closed-form CVB and VB for a zero-mean correlated bivariate Gaussian.

The target is f = f_1 f_{2|1} with f_1 = N(0, sigma1^2) and
f_{2|1} = N(beta theta_1, sigma_{2|1}^2). The approximation keeps the same
form with its own (sigma1_t, sigma2_t, rho_t). A CVA step replaces the
marginal of theta_1 while f~_{2|1} stays fixed; the reverse update then
re-expresses the joint so that the next step can free theta_2. The second
slot is the first one applied to coordinate-swapped model and state.

Setting rho_t = 0 gives the mean-field (VB) specialization, which never
develops correlation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np

from .divergence import kl_gauss
from .engine import ConditionalModel, StoppingRule, Trace, run
from .models import BivariateGaussian

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BivarTrueModel:
    sigma1: float
    sigma2: float
    rho: float

    def __post_init__(self) -> None:
        BivariateGaussian(self.sigma1, self.sigma2, self.rho)

    @property
    def beta21(self) -> float:
        return self.rho * self.sigma2 / self.sigma1

    @property
    def sigma21(self) -> float:
        return self.sigma2 * math.sqrt(1.0 - self.rho**2)

    def swapped(self) -> BivarTrueModel:
        return BivarTrueModel(self.sigma2, self.sigma1, self.rho)

    def as_gaussian(self) -> BivariateGaussian:
        return BivariateGaussian(self.sigma1, self.sigma2, self.rho)

    def vb_fixed_point_variances(self) -> tuple[float, float]:
        c = 1.0 - self.rho**2
        return self.sigma1**2 * c, self.sigma2**2 * c


@dataclass(frozen=True)
class CvbBivarState:
    sigma1_t: float
    sigma2_t: float
    rho_t: float
    parity: int = 0

    def __post_init__(self) -> None:
        BivariateGaussian(self.sigma1_t, self.sigma2_t, self.rho_t)

    @property
    def beta21_t(self) -> float:
        return self.rho_t * self.sigma2_t / self.sigma1_t

    @property
    def sigma21_t(self) -> float:
        return self.sigma2_t * math.sqrt(1.0 - self.rho_t**2)

    def swapped(self) -> CvbBivarState:
        return CvbBivarState(self.sigma2_t, self.sigma1_t, self.rho_t, 1 - self.parity)

    def as_gaussian(self) -> BivariateGaussian:
        return BivariateGaussian(self.sigma1_t, self.sigma2_t, self.rho_t)

    def to_dict(self) -> dict[str, Any]:
        return {
            "sigma1_t": self.sigma1_t,
            "sigma2_t": self.sigma2_t,
            "rho_t": self.rho_t,
            "beta21_t": self.beta21_t,
            "sigma21_t": self.sigma21_t,
        }


def cva_update_sigma1(state: CvbBivarState, model: BivarTrueModel) -> tuple[float, float]:
    """Optimal theta_1 marginal given f~_{2|1}; returns (sigma1_new, zeta1).

    KL(f~||f) after the step is -log(zeta1).
    """
    s21 = model.sigma21
    st21 = state.sigma21_t
    precision = 1.0 / model.sigma1**2 + (state.beta21_t - model.beta21) ** 2 / s21**2
    sigma1_new = 1.0 / math.sqrt(precision)
    log_zeta = (
        math.log(sigma1_new / model.sigma1)
        + math.log(st21 / s21)
        + (s21**2 - st21**2) / (2.0 * s21**2)
    )
    return sigma1_new, math.exp(log_zeta)


def reverse_update(state: CvbBivarState, sigma1_new: float) -> CvbBivarState:
    """Re-express the joint after theta_1's marginal moved to ``sigma1_new``.

    beta~_{2|1} and sigma~_{2|1} are invariant; only rho_t and sigma2_t move,
    and rho_t keeps its sign.
    """
    r0 = state.rho_t
    ratio = state.sigma1_t / sigma1_new
    rho2 = r0**2 / (r0**2 + ratio**2 * (1.0 - r0**2))
    sigma2 = state.sigma2_t * math.sqrt(r0**2 / ratio**2 + (1.0 - r0**2))
    return CvbBivarState(sigma1_new, sigma2, math.copysign(math.sqrt(rho2), r0), state.parity)


def kl_of_state(state: CvbBivarState, model: BivarTrueModel) -> float:
    return kl_gauss(state.as_gaussian(), model.as_gaussian())


class BivariateCvbModel(ConditionalModel):
    """Engine adapter; the ELBO is -KL(f~||f) since log f(x) is zero here."""

    name = "bivariate-cvb"

    def __init__(self, model: BivarTrueModel, init: CvbBivarState):
        self.model = model
        self.state = replace(init, parity=0)
        self.last_log_zeta: float | None = None

    @property
    def slot_schedule(self) -> Sequence[int]:
        return (0, 1)

    def initial_elbo(self) -> float:
        return -kl_of_state(self.state, self.model)

    def update_marginal(self, slot: int) -> float:
        if slot == 0:
            sigma1_new, zeta = cva_update_sigma1(self.state, self.model)
            state = reverse_update(self.state, sigma1_new)
        else:
            swapped = self.state.swapped()
            sigma1_new, zeta = cva_update_sigma1(swapped, self.model.swapped())
            state = reverse_update(swapped, sigma1_new).swapped()
        self.state = replace(state, parity=1 - slot)
        self.last_log_zeta = math.log(zeta)
        return self.last_log_zeta

    def snapshot(self) -> dict[str, Any]:
        return self.state.to_dict()


@dataclass(frozen=True)
class BivariateRun:
    trace: Trace
    state: CvbBivarState
    rho_init: float
    kl_init: float

    @property
    def kl_final(self) -> float:
        return -self.trace.final_elbo

    @property
    def kl_trace(self) -> list[float]:
        return [-e for e in self.trace.elbos]

    def to_row(self, algorithm: str) -> dict[str, Any]:
        return {
            "algorithm": algorithm,
            "rho_init": self.rho_init,
            "kl_init": self.kl_init,
            "kl_final": self.kl_final,
            "iters": self.trace.n_iterations,
            "converged": self.trace.converged,
        }


def run_bivariate(
    model: BivarTrueModel,
    init: CvbBivarState,
    rule: StoppingRule | None = None,
    *,
    keep_snapshots: bool = False,
) -> BivariateRun:
    adapter = BivariateCvbModel(model, init)
    trace = run(adapter, rule, keep_snapshots=keep_snapshots)
    kind = "vb" if init.rho_t == 0.0 else "cvb"
    trace.model = f"bivariate-{kind}"
    kl_init = -trace.entries[0].elbo
    logger.debug(
        "bivariate rho_init=%.2f: KL %.4f -> %.4f in %d iterations",
        init.rho_t,
        kl_init,
        -trace.final_elbo,
        trace.n_iterations,
    )
    return BivariateRun(trace, adapter.state, init.rho_t, kl_init)


def default_rho_grid(step: float = 0.05) -> np.ndarray:
    """Symmetric grid strictly inside (-1, 1); 39 points at the default step."""
    n = int(round((1.0 - step) / step))
    return np.round(np.arange(-n, n + 1) * step, 10)


def sweep_rho_init(
    model: BivarTrueModel,
    grid: Sequence[float] | np.ndarray | None = None,
    rule: StoppingRule | None = None,
    *,
    sigma_init: float = 1.0,
) -> list[BivariateRun]:
    grid = default_rho_grid() if grid is None else grid
    return [run_bivariate(model, CvbBivarState(sigma_init, sigma_init, float(r)), rule) for r in grid]
