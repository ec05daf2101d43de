"""Synthetic blob datasets: generation, standardization, container I/O."""

import itertools

import numpy as np
import pytest

from noisylab.data import (
    LabeledDataset,
    SampleStatus,
    blob_means,
    dataset_paths,
    gen_blobs,
    load_dataset,
    save_dataset,
    standardize,
)


def test_gen_blobs_layout():
    ds = gen_blobs(num_classes=4, per_class=25, dim=6, separation=5.0, seed=0)
    assert len(ds) == 100
    assert ds.dim == 6
    assert ds.num_classes == 4
    np.testing.assert_array_equal(ds.labels, np.repeat(np.arange(4), 25))
    np.testing.assert_array_equal(ds.labels, ds.true_class)
    assert (ds.status == int(SampleStatus.CLEAN)).all()
    assert ds.features.flags["C_CONTIGUOUS"]


def test_blob_means_min_distance_equals_separation():
    for sep in (2.0, 6.0):
        means = blob_means(num_classes=5, dim=3, separation=sep, seed=3)
        dists = [
            np.linalg.norm(means[i] - means[j])
            for i, j in itertools.combinations(range(5), 2)
        ]
        assert min(dists) == pytest.approx(sep, rel=1e-9)


def test_gen_blobs_clusters_near_means():
    means = blob_means(num_classes=3, dim=4, separation=8.0, seed=1)
    ds = gen_blobs(3, 400, 4, 8.0, seed=1, means=means)
    for k in range(3):
        emp = ds.features[ds.labels == k].mean(axis=0)
        assert np.linalg.norm(emp - means[k]) < 0.5


def test_gen_blobs_deterministic():
    a = gen_blobs(3, 10, 4, 5.0, seed=9)
    b = gen_blobs(3, 10, 4, 5.0, seed=9)
    np.testing.assert_array_equal(a.features, b.features)


def test_standardize_uses_train_stats():
    train = gen_blobs(3, 50, 4, 5.0, seed=0)
    test = gen_blobs(3, 20, 4, 5.0, seed=1)
    mu, sigma = train.features.mean(axis=0), train.features.std(axis=0)
    strain, stest = standardize(train, test)
    np.testing.assert_allclose(strain.features.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(strain.features.std(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(stest.features, (test.features - mu) / sigma, atol=1e-12)


def test_dataset_validation():
    feats = np.zeros((4, 2))
    good_labels = np.zeros(4, dtype=np.int64)
    status = np.zeros(4, dtype=np.int64)
    with pytest.raises(ValueError):
        LabeledDataset(feats, good_labels + 5, good_labels, status, num_classes=2, split="train")
    with pytest.raises(ValueError):
        LabeledDataset(feats, good_labels, good_labels, status, num_classes=2, split="dev")
    with pytest.raises(ValueError):
        LabeledDataset(feats[:3], good_labels, good_labels, status, num_classes=2, split="train")


def test_subset_and_counts():
    ds = gen_blobs(3, 10, 4, 5.0, seed=2)
    sub = ds.subset(np.array([0, 10, 20]))
    assert len(sub) == 3
    np.testing.assert_array_equal(sub.labels, [0, 1, 2])
    counts = ds.status_counts()
    assert counts == {"clean": 30, "closed": 0, "open": 0}


def test_copy_is_independent():
    ds = gen_blobs(2, 5, 3, 5.0, seed=0)
    clone = ds.copy()
    clone.features[0, 0] += 1.0
    clone.labels[0] = 1
    assert ds.features[0, 0] != clone.features[0, 0]
    assert ds.labels[0] != clone.labels[0]


def test_save_load_roundtrip(tmp_path):
    ds = gen_blobs(3, 12, 5, 4.0, seed=8)
    path = str(tmp_path / "toy.train.npz")
    save_dataset(path, ds)
    back = load_dataset(path)
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_array_equal(back.true_class, ds.true_class)
    np.testing.assert_array_equal(back.status, ds.status)
    assert back.num_classes == ds.num_classes
    assert back.split == ds.split


def test_dataset_paths():
    assert dataset_paths("runs/toy") == ("runs/toy.train.npz", "runs/toy.test.npz")
