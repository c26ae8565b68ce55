import numpy as np
import pytest

from sigtaylor.pathcore import random_lipschitz_path


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def paths(rng):
    return [random_lipschitz_path(rng, 10, rng.uniform(0.3, 1.5), 1.0, rng.normal()) for _ in range(10)]


def rel_err(a, b, floor=1e-12):
    return abs(a - b) / max(abs(b), floor)
