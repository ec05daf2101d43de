"""Benchmark dataset construction from a RunConfig.

The "cifar80n-o-mini" preset: Gaussian blob classes sharing cluster means
across train and test, the last open_fraction of classes turned into
out-of-distribution contamination, closed-set flips on the rest, features
standardized by train-split statistics (computed before corruption, which
never touches features anyway).
"""

from __future__ import annotations

import numpy as np

from .config import RunConfig
from .data import LabeledDataset, blob_means, gen_blobs, standardize
from .noise import NoiseSpec, build_openset_dataset, inject_closed_noise


def make_dataset(cfg: RunConfig) -> tuple[LabeledDataset, LabeledDataset]:
    """(train, test) for the configured preset, corruption applied."""
    data_seed = cfg.effective_data_seed
    means = blob_means(cfg.total_classes, cfg.dim, cfg.separation, data_seed)
    train = gen_blobs(
        cfg.total_classes,
        cfg.per_class_train,
        cfg.dim,
        cfg.separation,
        seed=np.random.SeedSequence(data_seed, spawn_key=(100,)),
        means=means,
    )
    test = gen_blobs(
        cfg.total_classes,
        cfg.per_class_test,
        cfg.dim,
        cfg.separation,
        seed=np.random.SeedSequence(data_seed, spawn_key=(101,)),
        means=means,
    )
    test.split = "test"
    train, test = standardize(train, test)

    spec = NoiseSpec(
        kind=cfg.noise_kind,
        closed_rate=cfg.closed_rate,
        open_set=cfg.open_set,
        open_fraction=cfg.open_fraction,
        seed=data_seed,
    )
    if cfg.open_set:
        return build_openset_dataset(train, test, spec)
    train = inject_closed_noise(train, spec)
    test.labels = test.true_class.copy()
    return train, test
