import numpy as np
import pytest

from speedstudy import example_roadside_homography


@pytest.fixture(scope="session")
def demo_h():
    """Realistic elevated-camera homography over a 60 m corridor."""
    return example_roadside_homography()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
