import numpy as np
import pytest

from utils.stats import AlignedTriple
from utils.synth import SynthConfig, generate_market_files

SMALL_INVESTORS = {
    "Companies": 12,
    "Financial": 6,
    "Governmental": 5,
    "NonProfit": 5,
    "Households": 60,
    "Foreign": 6,
}


def correlated_triple(alpha, rho, T, seed, beta_sq=None):
    """y = a1 x1 + a2 x2 + beta eps with unit-variance regressors of correlation rho."""
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal(T)
    x2 = rho * x1 + np.sqrt(1 - rho ** 2) * rng.standard_normal(T)
    if beta_sq is None:
        beta_sq = 1 - alpha[0] ** 2 - alpha[1] ** 2 - 2 * alpha[0] * alpha[1] * rho
    y = alpha[0] * x1 + alpha[1] * x2 + np.sqrt(beta_sq) * rng.standard_normal(T)
    return AlignedTriple(y, x1, x2)


@pytest.fixture
def make_triple():
    return correlated_triple


@pytest.fixture
def small_config():
    return SynthConfig(n_days=60, seed=7, investors=dict(SMALL_INVESTORS))


@pytest.fixture(scope="session")
def synth_files(tmp_path_factory):
    """A 300-day synthetic market with the default investor population."""
    config = SynthConfig(n_days=300, seed=11)
    return generate_market_files(config, tmp_path_factory.mktemp("synth"))
