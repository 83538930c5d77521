import numpy as np
import pytest

from depthsep import build_instance


@pytest.fixture(scope="session")
def spec_d1():
    return build_instance(1, seed=7)


@pytest.fixture(scope="session")
def spec_d2():
    return build_instance(2, seed=9)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
