import numpy as np
import pytest

from mmspec.model import DEFAULT_B, ModelSpec


@pytest.fixture
def spec():
    return ModelSpec(DEFAULT_B, [1.0, 1.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
