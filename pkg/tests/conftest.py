import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nczip.model import ModelConfig, init_params  # noqa: E402


@pytest.fixture
def tiny_config():
    return ModelConfig(
        window=3, char_gru_units=2, pos_gru_units=2, merged_gru_units=2, dense1_units=2, dropout_rho=0.0, seed=7
    )


@pytest.fixture
def tiny_params(tiny_config):
    params = init_params(tiny_config)
    # non-zero biases so every term of the recurrence is exercised
    rng = np.random.default_rng(11)
    for layer in ("char_gru", "pos_gru", "merged_gru"):
        getattr(params, layer).b[...] = rng.uniform(-0.5, 0.5, getattr(params, layer).b.shape)
    params.dense1.theta[...] = rng.uniform(-0.5, 0.5, params.dense1.theta.shape)
    params.dense2.theta[...] = rng.uniform(-0.5, 0.5, params.dense2.theta.shape)
    return params


@pytest.fixture
def small_config():
    return ModelConfig(
        window=8, char_gru_units=16, pos_gru_units=4, merged_gru_units=16, dense1_units=16, dropout_rho=0.0, seed=3
    )


@pytest.fixture(scope="session")
def sample_text():
    from importlib import resources

    return (resources.files("nczip") / "data" / "sample.txt").read_bytes()
