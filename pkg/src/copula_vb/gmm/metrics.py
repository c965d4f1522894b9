from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import DomainError


def purity(pred: np.ndarray, truth: np.ndarray) -> float:
    """sum over predicted clusters of the best-matching true-cluster count, over N."""
    p = np.asarray(pred, dtype=int)
    t = np.asarray(truth, dtype=int)
    if p.shape[1] != t.shape[1]:
        raise DomainError(f"label matrices cover {p.shape[1]} and {t.shape[1]} points")
    overlap = p @ t.T
    return float(overlap.max(axis=1).sum() / p.shape[1])


def mse_means(pred_means: np.ndarray, true_means: np.ndarray) -> float:
    """(1/K) min over cluster permutations of the summed squared distance."""
    pred = np.asarray(pred_means, dtype=float)
    true = np.asarray(true_means, dtype=float)
    if pred.shape != true.shape:
        raise DomainError(f"mean arrays differ in shape: {pred.shape} vs {true.shape}")
    cost = np.sum((pred[:, None, :] - true[None, :, :]) ** 2, axis=-1)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / pred.shape[0])
