from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Callable, Sequence

import numpy as np

from ..engine import StoppingRule
from .algorithms import ClusteringResult, em1_run, em2_run, kmeans_run, vb_run
from .cvb import CvbStructure, run_structures, scheme_cvb1, scheme_cvb2, scheme_cvb3
from .data import DataSet
from .stats import GmmModel


class ClusteringAlgorithm(ABC):
    name: str

    @abstractmethod
    def fit(
        self,
        data: DataSet,
        model: GmmModel,
        rule: StoppingRule,
        init_means: np.ndarray | None = None,
        anchors: Sequence[int] | np.ndarray | None = None,
    ) -> ClusteringResult:
        raise NotImplementedError


class MeanFieldAlgorithm(ClusteringAlgorithm):
    def __init__(self, name: str, runner: Callable[..., ClusteringResult]):
        self.name = name
        self._runner = runner

    def fit(self, data, model, rule, init_means=None, anchors=None) -> ClusteringResult:
        return self._runner(data, init_means, rule, model)


class CvbScheme(ClusteringAlgorithm):
    """One aggregation scheme over per-anchor CVB structures."""

    def __init__(self, name: str, combine: Callable[[Sequence[CvbStructure]], ClusteringResult]):
        self.name = name
        self.combine = combine

    def fit(self, data, model, rule, init_means=None, anchors=None) -> ClusteringResult:
        return self.combine(run_structures(data, anchors, init_means, rule, model))


_FACTORIES: dict[str, Callable[[], ClusteringAlgorithm]] = {
    "kmeans": lambda: MeanFieldAlgorithm("kmeans", kmeans_run),
    "em1": lambda: MeanFieldAlgorithm("em1", em1_run),
    "em2": lambda: MeanFieldAlgorithm("em2", em2_run),
    "vb": lambda: MeanFieldAlgorithm("vb", vb_run),
    "cvb1": lambda: CvbScheme("cvb1", scheme_cvb1),
    "cvb2": lambda: CvbScheme("cvb2", scheme_cvb2),
    "cvb3": lambda: CvbScheme("cvb3", scheme_cvb3),
}

_ALIASES = {"icm": "kmeans", "k-means": "kmeans"}


def algorithm_names() -> list[str]:
    return list(_FACTORIES)


def make_algorithm(name: str) -> ClusteringAlgorithm:
    key = _ALIASES.get(name.strip().lower(), name.strip().lower())
    if key not in _FACTORIES:
        raise ValueError(f"Unknown algorithm: {name}")
    return _FACTORIES[key]()


def make_algorithms(names: Sequence[str]) -> list[ClusteringAlgorithm]:
    return [make_algorithm(n) for n in names if n.strip()]


def run_algorithms(
    names: Sequence[str],
    data: DataSet,
    model: GmmModel,
    rule: StoppingRule,
    *,
    init_means: np.ndarray | None = None,
    anchors: Sequence[int] | np.ndarray | None = None,
) -> dict[str, ClusteringResult]:
    """Fit every named algorithm; CVB schemes share a single set of anchor structures."""
    results: dict[str, ClusteringResult] = {}
    structures: list[CvbStructure] | None = None
    for algo in make_algorithms(names):
        if isinstance(algo, CvbScheme):
            if structures is None:
                structures = run_structures(data, anchors, init_means, rule, model)
            results[algo.name] = algo.combine(structures)
            results[algo.name].extras["structure_traces"] = [s.trace for s in structures]
        else:
            results[algo.name] = algo.fit(data, model, rule, init_means)
    return results
