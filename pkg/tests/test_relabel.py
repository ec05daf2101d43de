"""Label smoothing, sharpening, and pseudo-label construction."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import prob_rows
from noisylab.relabel import (
    RelabelConfig,
    TargetDistribution,
    clean_targets,
    pseudo_label,
    sharpen,
    smooth_labels,
)


def test_smooth_labels_frozen():
    out = smooth_labels(np.array([0]), num_classes=5, epsilon=0.1)
    np.testing.assert_allclose(out[0], [0.9, 0.025, 0.025, 0.025, 0.025], atol=1e-12)


def test_smooth_labels_zero_epsilon_is_onehot():
    out = smooth_labels(np.array([1, 2]), 3, 0.0)
    np.testing.assert_array_equal(out, [[0, 1, 0], [0, 0, 1]])


@given(st.integers(2, 8), st.floats(0.0, 0.45))
def test_smooth_labels_rows_sum_to_one(c, eps):
    # epsilon mass spreads over the other c-1 classes, so the argmax is
    # preserved whenever 1 - eps > eps / (c - 1); eps <= 0.45 keeps that
    # true even for c = 2
    labels = np.arange(c)
    out = smooth_labels(labels, c, eps)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)
    for k in range(c):
        assert out[k].argmax() == k


def test_sharpen_frozen():
    out = sharpen(np.array([[0.7, 0.3]]), tau=0.5)
    np.testing.assert_allclose(out[0], [0.49 / 0.58, 0.09 / 0.58], atol=1e-12)


@given(prob_rows())
def test_sharpen_identity_at_tau_one(p):
    np.testing.assert_allclose(sharpen(p, 1.0), p, atol=1e-12)


@given(prob_rows())
def test_sharpen_preserves_argmax_and_normalization(p):
    out = sharpen(p, 0.4)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_array_equal(out.argmax(axis=1), p.argmax(axis=1))
    # sharpening concentrates mass on the argmax
    assert (out.max(axis=1) >= p.max(axis=1) - 1e-12).all()


def test_pseudo_label_mean_then_sharpen():
    pw = np.array([[0.8, 0.2]])
    ps = np.array([[0.6, 0.4]])
    ident = pseudo_label(pw, ps, RelabelConfig(tau=1.0))
    np.testing.assert_allclose(ident.probs[0], [0.7, 0.3], atol=1e-12)
    sharp = pseudo_label(pw, ps, RelabelConfig(tau=0.5))
    np.testing.assert_allclose(
        sharp.probs[0], [0.49 / 0.58, 0.09 / 0.58], atol=1e-12
    )


def test_pseudo_label_sharpen_each_view_first():
    pw = np.array([[0.8, 0.2]])
    ps = np.array([[0.6, 0.4]])
    cfg = RelabelConfig(tau=0.5, sharpen_after_mean=False)
    got = pseudo_label(pw, ps, cfg)
    want = 0.5 * (sharpen(pw, 0.5) + sharpen(ps, 0.5))
    np.testing.assert_allclose(got.probs, want, atol=1e-12)


def test_clean_targets_are_smoothed_labels():
    labels = np.array([1, 0, 2])
    got = clean_targets(labels, num_classes=3, config=RelabelConfig(epsilon=0.1))
    np.testing.assert_allclose(got.probs, smooth_labels(labels, 3, 0.1), atol=1e-12)


def test_target_distribution_validation():
    with pytest.raises(ValueError):
        TargetDistribution(probs=np.array([[0.5, 0.6]]), origin="pseudo")
    with pytest.raises(ValueError):
        TargetDistribution(probs=np.array([[-0.1, 1.1]]), origin="pseudo")
    with pytest.raises(ValueError):
        TargetDistribution(probs=np.array([[0.5, 0.5]]), origin="guessed")


def test_relabel_config_validation():
    with pytest.raises(ValueError):
        RelabelConfig(epsilon=1.0)
    with pytest.raises(ValueError):
        RelabelConfig(tau=0.0)
