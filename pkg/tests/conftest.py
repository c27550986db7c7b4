from __future__ import annotations

import numpy as np
import pytest

from shelora.crypto import HeParams, he_keygen


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_params():
    # enough depth for matmul, averaging mask and truncation mask
    return HeParams(2048, (30, 20, 20, 20, 30))


@pytest.fixture
def keys(small_params):
    return he_keygen(small_params, seed=7)
