import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from anisolab.construction import build_triple  # noqa: E402


@pytest.fixture(scope="session")
def build6():
    return build_triple(2.0, 1.0, 6)


@pytest.fixture(scope="session")
def build9():
    return build_triple(2.0, 1.0, 9)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
