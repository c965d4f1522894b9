"""Gaussian-mixture clustering: data, mean-field algorithms, per-anchor CVB and metrics."""

from .algorithms import (
    ClusteringResult,
    Em1Model,
    Em2Model,
    KMeansModel,
    MeanFieldModel,
    VbModel,
    em1_run,
    em2_run,
    kmeans_run,
    vb_run,
)
from .cvb import (
    CvbStructure,
    CvbStructureModel,
    CvbStructureState,
    cvb_marginal_estimates,
    cvb_run,
    run_structures,
    scheme_cvb1,
    scheme_cvb2,
    scheme_cvb3,
    select_anchors,
)
from .data import DataSet, generate_data, initial_means, label_indices, make_rng, one_hot, true_means
from .metrics import mse_means, purity
from .registry import ClusteringAlgorithm, algorithm_names, make_algorithm, run_algorithms
from .stats import ClusterStats, GmmModel, posterior_stats

__all__ = [
    "ClusterStats",
    "ClusteringAlgorithm",
    "ClusteringResult",
    "CvbStructure",
    "CvbStructureModel",
    "CvbStructureState",
    "DataSet",
    "Em1Model",
    "Em2Model",
    "GmmModel",
    "KMeansModel",
    "MeanFieldModel",
    "VbModel",
    "algorithm_names",
    "cvb_marginal_estimates",
    "cvb_run",
    "em1_run",
    "em2_run",
    "generate_data",
    "initial_means",
    "kmeans_run",
    "label_indices",
    "make_algorithm",
    "make_rng",
    "mse_means",
    "one_hot",
    "posterior_stats",
    "purity",
    "run_algorithms",
    "run_structures",
    "scheme_cvb1",
    "scheme_cvb2",
    "scheme_cvb3",
    "select_anchors",
    "true_means",
    "vb_run",
]
