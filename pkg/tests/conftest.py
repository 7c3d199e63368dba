import numpy as np
import pytest

from bimetro import _config


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(autouse=True)
def fresh_config(monkeypatch):
    monkeypatch.delenv(_config.SEED_ENV_VAR, raising=False)
    _config.reset()
    yield
    _config.reset()
