import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hierbench.fitting import fit_pair
from hierbench.model import ModelConfig
from hierbench.sampler import SamplerConfig
from hierbench.synthetic import make_pair_data


@pytest.fixture(scope="session")
def small_fit():
    """One modest-budget fit of well-conditioned synthetic data, shared by
    the decision/sensitivity tests that only need plausible draws."""
    pair = make_pair_data(
        effect=0.02, noise_sd=0.01, n_datasets=9, n_folds=5, rho=0.2, seed=101,
        between_sd=0.015,
    )
    cfg = SamplerConfig(chains=2, warmup=400, draws=600, seed=2024)
    draws, diag = fit_pair(pair, ModelConfig(), cfg)
    return pair, draws, diag
