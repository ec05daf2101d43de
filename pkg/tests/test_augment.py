"""Two-view augmentation: determinism, dropout count, batch independence."""

import numpy as np
import pytest

from noisylab.augment import AugmentPolicy, Augmenter, predict_two_views
from noisylab.model import init_params

N, DIM = 30, 10


def make_augmenter(seed=0, **kw):
    policy = AugmentPolicy(seed=seed, **kw)
    return Augmenter(policy, N, DIM)


def test_policy_validation():
    with pytest.raises(ValueError):
        AugmentPolicy(weak_sigma=-0.1)
    with pytest.raises(ValueError):
        AugmentPolicy(weak_sigma=0.5, strong_sigma=0.1)
    with pytest.raises(ValueError):
        AugmentPolicy(dropout_fraction=1.0)


def test_weak_view_is_additive_jitter(rng):
    aug = make_augmenter()
    x = rng.normal(size=(N, DIM))
    ids = np.arange(N)
    jitter = aug.weak_view(x, ids, epoch=0) - x
    # same epoch, different base input: identical jitter table (up to the
    # rounding that (x + j) - x reintroduces)
    x2 = rng.normal(size=(N, DIM))
    np.testing.assert_allclose(aug.weak_view(x2, ids, 0) - x2, jitter, atol=1e-12)
    assert np.abs(jitter).max() > 0


def test_strong_view_zeroes_exact_count():
    aug = make_augmenter(dropout_fraction=0.3)
    x = np.full((N, DIM), 50.0)  # large values: jitter can never hit exactly 0
    out = aug.strong_view(x, np.arange(N), epoch=2)
    k = round(0.3 * DIM)
    assert k == 3
    np.testing.assert_array_equal((out == 0).sum(axis=1), np.full(N, k))


def test_views_deterministic_across_instances(rng):
    x = rng.normal(size=(N, DIM))
    ids = np.arange(N)
    a, b = make_augmenter(seed=5), make_augmenter(seed=5)
    for epoch in (0, 3):
        np.testing.assert_array_equal(a.weak_view(x, ids, epoch), b.weak_view(x, ids, epoch))
        np.testing.assert_array_equal(a.strong_view(x, ids, epoch), b.strong_view(x, ids, epoch))
    c = make_augmenter(seed=6)
    assert not np.array_equal(a.weak_view(x, ids, 0), c.weak_view(x, ids, 0))


def test_epochs_and_views_use_distinct_streams(rng):
    aug = make_augmenter()
    x = rng.normal(size=(N, DIM))
    ids = np.arange(N)
    assert not np.array_equal(aug.weak_view(x, ids, 0), aug.weak_view(x, ids, 1))
    assert not np.array_equal(aug.weak_view(x, ids, 0), aug.strong_view(x, ids, 0))


def test_batch_composition_independence(rng):
    aug = make_augmenter(dropout_fraction=0.2)
    x = rng.normal(size=(N, DIM))
    all_ids = np.arange(N)
    full_w = aug.weak_view(x, all_ids, 4)
    full_s = aug.strong_view(x, all_ids, 4)
    sub = np.array([3, 17, 8, 25])
    np.testing.assert_array_equal(aug.weak_view(x[sub], sub, 4), full_w[sub])
    np.testing.assert_array_equal(aug.strong_view(x[sub], sub, 4), full_s[sub])


def test_two_views_pairs_the_single_views(rng):
    aug = make_augmenter()
    x = rng.normal(size=(N, DIM))
    ids = np.arange(N)
    xw, xs = aug.two_views(x, ids, 1)
    np.testing.assert_array_equal(xw, aug.weak_view(x, ids, 1))
    np.testing.assert_array_equal(xs, aug.strong_view(x, ids, 1))


def test_predict_two_views_shapes(rng):
    aug = make_augmenter()
    params = init_params((DIM, 6, 4), seed=0)
    x = rng.normal(size=(N, DIM))
    pair = predict_two_views(params, aug, x, np.arange(N), epoch=0)
    for arr in (pair.scores_weak, pair.scores_strong, pair.probs_weak, pair.probs_strong):
        assert arr.shape == (N, 4)
    np.testing.assert_allclose(pair.probs_weak.sum(axis=1), 1.0, atol=1e-9)
    assert not np.array_equal(pair.probs_weak, pair.probs_strong)
