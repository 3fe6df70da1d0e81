import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_dominance_warning():
    # coarse grids trip the diagonal-dominance advisory; it is tested explicitly elsewhere
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="step matrix is not strictly diagonally dominant")
        yield


@pytest.fixture
def gaussian():
    return lambda r: np.exp(-(((np.asarray(r) - 25.05) / 7.5) ** 2))
