import numpy as np
import pytest

from pmlda.blend import TopicParams


@pytest.fixture
def unit_topics_1d():
    """N(0, 1) and N(1, 1)."""
    return TopicParams(np.array([[0.0], [1.0]]), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
