"""Shared fixtures and hypothesis strategies."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def normalize_rows(raw: np.ndarray) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    return raw / raw.sum(axis=-1, keepdims=True)


@st.composite
def prob_rows(draw, n_rows=None, n_cols=None, min_cols=2, max_cols=8):
    """Batches of strictly positive probability rows."""
    rows = n_rows if n_rows is not None else draw(st.integers(1, 6))
    cols = n_cols if n_cols is not None else draw(st.integers(min_cols, max_cols))
    cell = st.floats(1e-4, 1.0, allow_nan=False, allow_infinity=False)
    raw = draw(
        st.lists(st.lists(cell, min_size=cols, max_size=cols), min_size=rows, max_size=rows)
    )
    return normalize_rows(np.array(raw))


def random_probs(rng: np.random.Generator, n: int, c: int) -> np.ndarray:
    """Softmax of random logits: generic strictly positive rows."""
    z = rng.normal(size=(n, c)) * 3.0
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_net():
    from noisylab.model import init_params

    return init_params((4, 6, 3), seed=7)
