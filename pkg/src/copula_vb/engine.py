"""Shared driver for conditionally variational updates.

A :class:`ConditionalModel` owns its approximation and knows how to replace one
marginal factor at a time (the CVA step) while the complementary conditional
stays fixed. :func:`run` sweeps the slots round-robin, records the ELBO after
every single-slot update and stops on the model's convergence predicate. The
default predicate compares ELBOs one full sweep apart, so no run stops before
every slot has been freed at least once.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

from .errors import DomainError, MonotonicityError

logger = logging.getLogger(__name__)

ELBO_SLACK = 1e-9


@dataclass(frozen=True)
class StoppingRule:
    epsilon: float = 0.01
    max_iters: int = 500

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be at least 1, got {self.max_iters!r}")


@dataclass
class TraceEntry:
    iteration: int
    slot: Hashable | None
    elbo: float
    delta: float | None
    snapshot: dict[str, Any] | None = None
    flags: tuple[str, ...] = ()


@dataclass
class Trace:
    model: str
    entries: list[TraceEntry] = field(default_factory=list)
    converged: bool = False
    truncated: bool = False

    def append(self, entry: TraceEntry) -> None:
        self.entries.append(entry)

    @property
    def elbos(self) -> list[float]:
        return [e.elbo for e in self.entries]

    @property
    def deltas(self) -> list[float | None]:
        return [e.delta for e in self.entries]

    @property
    def final_elbo(self) -> float:
        if not self.entries:
            raise DomainError("empty trace has no final ELBO")
        return self.entries[-1].elbo

    @property
    def n_iterations(self) -> int:
        return self.entries[-1].iteration if self.entries else 0

    @property
    def flags(self) -> set[str]:
        return {f for e in self.entries for f in e.flags}

    def is_monotone(self, slack: float = ELBO_SLACK) -> bool:
        return all(e.delta is None or e.delta >= -slack for e in self.entries)

    def to_rows(self) -> list[dict[str, Any]]:
        return [
            {
                "iteration": e.iteration,
                "slot": "" if e.slot is None else str(e.slot),
                "elbo": e.elbo,
                "delta": "" if e.delta is None else e.delta,
                "flags": ";".join(e.flags),
            }
            for e in self.entries
        ]


def delta_within(delta: float | None, rule: StoppingRule, slack: float = ELBO_SLACK) -> bool:
    """0 <= delta <= epsilon, with rounding noise below the slack counted as zero."""
    return delta is not None and -slack <= delta <= rule.epsilon


def sweep_delta(trace: Trace, width: int) -> float | None:
    """ELBO gain over the last ``width`` updates; None until that many steps are on record."""
    if width < 1 or not trace.entries:
        return None
    last = trace.entries[-1]
    target = last.iteration - width
    for e in reversed(trace.entries):
        if e.iteration == target:
            return last.elbo - e.elbo
        if e.iteration < target:
            break
    return None


class ConditionalModel(ABC):
    """A model whose approximation is refined one marginal slot at a time."""

    name: str = "model"

    @property
    @abstractmethod
    def slot_schedule(self) -> Sequence[Hashable]:
        """Ordered slots swept round-robin by :func:`run`."""

    @abstractmethod
    def update_marginal(self, slot: Hashable) -> float:
        """Replace the marginal factor of ``slot`` and return the new log normalizer (the ELBO)."""

    def initial_elbo(self) -> float | None:
        return None

    def snapshot(self) -> dict[str, Any]:
        return {}

    def pop_flags(self) -> tuple[str, ...]:
        return ()

    def converged(self, trace: Trace, rule: StoppingRule) -> bool:
        # with a monotone trace the last single-step delta is within the sweep gain
        return delta_within(sweep_delta(trace, len(self.slot_schedule)), rule)


def run(model: ConditionalModel, rule: StoppingRule | None = None, *, keep_snapshots: bool = False) -> Trace:
    rule = rule or StoppingRule()
    slots = list(model.slot_schedule)
    if not slots:
        raise DomainError(f"{model.name}: empty slot schedule")

    trace = Trace(model=model.name)
    previous = model.initial_elbo()
    if previous is not None:
        trace.append(TraceEntry(0, None, previous, None, model.snapshot() if keep_snapshots else None))

    for nu in range(1, rule.max_iters + 1):
        slot = slots[(nu - 1) % len(slots)]
        elbo = float(model.update_marginal(slot))
        delta = None if previous is None else elbo - previous
        if delta is not None and delta < -ELBO_SLACK:
            raise MonotonicityError(model.name, nu, previous, elbo)
        trace.append(
            TraceEntry(
                nu,
                slot,
                elbo,
                delta,
                model.snapshot() if keep_snapshots else None,
                model.pop_flags(),
            )
        )
        previous = elbo
        if model.converged(trace, rule):
            trace.converged = True
            break
    else:
        trace.truncated = True
        logger.info("%s: truncated at max_iters=%d", model.name, rule.max_iters)

    logger.debug("%s: %d iterations, final ELBO %.6f", model.name, trace.n_iterations, trace.final_elbo)
    return trace


def elbo_gap_bound_check(trace: Trace, exact_log_evidence: float, slack: float = ELBO_SLACK) -> bool:
    """True iff every recorded ELBO is at most the exact log evidence (plus slack)."""
    return all(e.elbo <= exact_log_evidence + slack for e in trace.entries)
