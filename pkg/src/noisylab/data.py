"""Synthetic labeled datasets and their on-disk container.

Datasets are Gaussian blob clusters with hidden ground truth retained next
to the (possibly corrupted) annotated labels, so selection and partition
quality can be scored exactly. Files are ``.npz`` containers with a JSON
header; one container per split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ShapeError

CONTAINER_VERSION = 1


class SampleStatus(IntEnum):
    """Hidden per-sample ground truth about the annotated label."""

    CLEAN = 0
    CLOSED = 1  # in-distribution sample, label flipped to a wrong known class
    OPEN = 2  # out-of-distribution sample, label invented in the known space


@dataclass
class LabeledDataset:
    """One split of a dataset, with hidden ground truth.

    ``labels`` are the annotated (training) labels and always lie in
    ``[0, num_classes)``. ``true_class`` is the generating cluster id and may
    be >= num_classes for out-of-distribution samples. ``status`` holds
    SampleStatus values.
    """

    features: np.ndarray
    labels: np.ndarray
    true_class: np.ndarray
    status: np.ndarray
    num_classes: int
    split: str = "train"

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        self.true_class = np.ascontiguousarray(self.true_class, dtype=np.int64)
        self.status = np.ascontiguousarray(self.status, dtype=np.int64)
        n = self.features.shape[0]
        if self.features.ndim != 2:
            raise ShapeError(f"features must be 2-d, got shape {self.features.shape}")
        for name, arr in (
            ("labels", self.labels),
            ("true_class", self.true_class),
            ("status", self.status),
        ):
            if arr.shape != (n,):
                raise ShapeError(f"{name} shape {arr.shape} does not match N={n}")
        if self.num_classes < 1:
            raise ShapeError(f"num_classes must be >= 1, got {self.num_classes}")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ShapeError("annotated labels must lie in [0, num_classes)")
        if self.split not in ("train", "test"):
            raise ShapeError(f"split must be train or test, got {self.split!r}")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def status_counts(self) -> dict[str, int]:
        return {
            s.name.lower(): int(np.sum(self.status == s)) for s in SampleStatus
        }

    def subset(self, idx: np.ndarray) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(
            features=self.features[idx],
            labels=self.labels[idx],
            true_class=self.true_class[idx],
            status=self.status[idx],
            num_classes=self.num_classes,
            split=self.split,
        )

    def copy(self) -> "LabeledDataset":
        return self.subset(np.arange(len(self)))


def gen_blobs(
    num_classes: int,
    per_class: int,
    dim: int,
    separation: float,
    seed: int,
    means: np.ndarray | None = None,
) -> LabeledDataset:
    """Unit-variance Gaussian clusters, one per class, all labels clean.

    Cluster means are drawn from a standard normal and rescaled so the
    minimum pairwise distance equals ``separation``. Pass ``means`` to reuse
    the cluster geometry of another split (the per-sample draws still come
    from ``seed``).
    """
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    if separation <= 0:
        raise ValueError(f"separation must be > 0, got {separation}")
    rng = np.random.default_rng(seed)
    if means is None:
        means = blob_means(num_classes, dim, separation, seed)
    else:
        means = np.asarray(means, dtype=np.float64)
        if means.shape != (num_classes, dim):
            raise ShapeError(
                f"means shape {means.shape} does not match ({num_classes}, {dim})"
            )
    n = num_classes * per_class
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    features = means[labels] + rng.normal(size=(n, dim))
    return LabeledDataset(
        features=features,
        labels=labels,
        true_class=labels.copy(),
        status=np.zeros(n, dtype=np.int64),
        num_classes=num_classes,
    )


def blob_means(num_classes: int, dim: int, separation: float, seed: int) -> np.ndarray:
    """Cluster means with minimum pairwise distance exactly ``separation``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(17,)))
    means = rng.normal(size=(num_classes, dim))
    diffs = means[:, None, :] - means[None, :, :]
    dists = np.sqrt((diffs**2).sum(-1))
    np.fill_diagonal(dists, np.inf)
    min_dist = dists.min()
    if min_dist <= 0:
        raise ValueError("degenerate blob means, try another seed")
    return means * (separation / min_dist)


def standardize(
    train: LabeledDataset, test: LabeledDataset
) -> tuple[LabeledDataset, LabeledDataset]:
    """Shift/scale both splits by the train split's feature mean and std."""
    mu = train.features.mean(axis=0)
    sd = train.features.std(axis=0)
    sd[sd == 0] = 1.0
    out = []
    for ds in (train, test):
        scaled = ds.copy()
        scaled.features = (scaled.features - mu) / sd
        out.append(scaled)
    return out[0], out[1]


def save_dataset(path: str, dataset: LabeledDataset) -> None:
    """Write one split to an .npz container with a JSON header."""
    header = {
        "version": CONTAINER_VERSION,
        "n": len(dataset),
        "num_classes": dataset.num_classes,
        "dim": dataset.dim,
        "split": dataset.split,
    }
    from .ioutils import atomic_savez

    atomic_savez(
        path,
        header=np.frombuffer(
            json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
        ),
        features=dataset.features,
        labels=dataset.labels,
        true_class=dataset.true_class,
        status=dataset.status,
    )


def load_dataset(path: str) -> LabeledDataset:
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode("utf-8"))
        if header.get("version") != CONTAINER_VERSION:
            raise ValueError(
                f"unsupported dataset container version {header.get('version')!r}"
            )
        return LabeledDataset(
            features=data["features"],
            labels=data["labels"],
            true_class=data["true_class"],
            status=data["status"],
            num_classes=int(header["num_classes"]),
            split=str(header["split"]),
        )


def dataset_paths(stem: str) -> tuple[str, str]:
    """Train/test container paths for a dataset stem."""
    return f"{stem}.train.npz", f"{stem}.test.npz"
