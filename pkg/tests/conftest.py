import numpy as np
import pytest

from ccnd import model


@pytest.fixture
def diamond():
    return model.diamond()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
