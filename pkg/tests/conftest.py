from __future__ import annotations

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from litsphere import EnvironmentMap


def smooth_env(rng, height=32, width=32, floor=0.05, scale=1.0, sigma=2.0):
    """Random smooth strictly-positive environment for renderer tests."""
    noise = rng.random((height, width, 3))
    soft = np.stack(
        [gaussian_filter(noise[:, :, c], sigma=sigma, mode="wrap") for c in range(3)],
        axis=2,
    )
    return EnvironmentMap(np.ascontiguousarray(floor + scale * soft))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def env32(rng):
    return smooth_env(rng, 32, 32)


@pytest.fixture
def env64(rng):
    return smooth_env(rng, 64, 64)
