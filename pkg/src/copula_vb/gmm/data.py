from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError


def make_rng(base_seed: int, run_index: int = 0) -> np.random.Generator:
    """Counter-based stream for one Monte Carlo run; independent of thread scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(base_seed), int(run_index)])))


@dataclass(frozen=True, eq=False)
class DataSet:
    """Observations stored row-wise as an (N, 2) array; ``X`` is the 2 x N view."""

    points: np.ndarray
    K: int

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DomainError(f"points must have shape (N, 2), got {pts.shape}")
        if pts.shape[0] < 1:
            raise DomainError("a data set needs at least one observation")
        if not np.all(np.isfinite(pts)):
            raise DomainError("observations must be finite")
        if self.K < 1:
            raise DomainError(f"K must be positive, got {self.K}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def N(self) -> int:
        return int(self.points.shape[0])

    @property
    def X(self) -> np.ndarray:
        return self.points.T


def one_hot(indices: np.ndarray, K: int) -> np.ndarray:
    """K x N boolean label matrix with a single True per column."""
    idx = np.asarray(indices, dtype=int)
    return idx[None, :] == np.arange(K)[:, None]


def label_indices(labels: np.ndarray) -> np.ndarray:
    """Per-column argmax of a K x N hard or soft label matrix (lowest index on ties)."""
    return np.argmax(np.asarray(labels), axis=0)


def initial_means(K: int) -> np.ndarray:
    """Unit corners on the circle of radius sqrt(2), starting at (-1, 1) and going clockwise.

    For K = 4 these are exactly (-1, 1), (1, 1), (1, -1), (-1, -1).
    """
    angles = 0.75 * np.pi - 2.0 * np.pi * np.arange(K) / K
    corners = np.sqrt(2.0) * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return np.round(corners, 12) + 0.0


def true_means(K: int, radius: float) -> np.ndarray:
    if radius < 0:
        raise DomainError(f"radius must be nonnegative, got {radius}")
    return initial_means(K) * radius + 1.0


def generate_data(
    K: int = 4,
    radius: float = 4.0,
    N: int = 100,
    seed: int | np.random.Generator = 0,
) -> tuple[DataSet, np.ndarray, np.ndarray]:
    """Draw N points, each from N(mu_k, I_2) with k uniform over K clusters.

    Returns the data set, the true K x N label matrix and the true (K, 2) means.
    """
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    means = true_means(K, radius)
    k = rng.integers(0, K, size=N)
    points = means[k] + rng.standard_normal((N, 2))
    return DataSet(points, K), one_hot(k, K), means
