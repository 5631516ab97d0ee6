import numpy as np
import pytest

from ecml.synthetic import SynthConfig, generate


@pytest.fixture(scope="session")
def default_dataset():
    return generate(SynthConfig(seed=0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def unit_rows(rng, n, d):
    x = rng.normal(size=(n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
