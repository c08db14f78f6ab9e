import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def bundled_logistic_1d():
    from importlib import resources

    from fishercert.core_model import load_dataset

    return load_dataset(resources.files("fishercert") / "data" / "logistic_1d.csv")
