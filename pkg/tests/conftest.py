import numpy as np
import pytest
from hypothesis import strategies as st


def unit_vectors():
    """Hypothesis strategy for points on the unit sphere."""
    return (
        st.tuples(*(st.floats(-1, 1, allow_nan=False) for _ in range(3)))
        .filter(lambda v: np.linalg.norm(v) > 0.1)
        .map(lambda v: tuple(np.asarray(v) / np.linalg.norm(v)))
    )


def ball_vectors():
    return st.tuples(*(st.floats(-1, 1, allow_nan=False) for _ in range(3))).map(
        lambda v: tuple(np.asarray(v) / max(1.0, np.linalg.norm(v)))
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
