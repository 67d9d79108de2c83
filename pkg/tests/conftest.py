import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "finslerlab",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "finslerlab"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def ball_points(rng, count, n, radius=0.9):
    """Uniform points in the Euclidean ball of the given radius."""
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return radius * rng.uniform(size=(count, 1)) ** (1.0 / n) * d
