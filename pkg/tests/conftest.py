from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from copula_vb.bivariate import BivarTrueModel
from copula_vb.gmm import generate_data

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def config_dir() -> Path:
    return REPO_ROOT / "config"


@pytest.fixture
def bivar_model() -> BivarTrueModel:
    return BivarTrueModel(2.0, 1.0, 0.8)


@pytest.fixture
def gmm_small():
    """K=4, N=40 instance at radius 4 from a fixed stream."""
    return generate_data(K=4, radius=4.0, N=40, seed=11)
