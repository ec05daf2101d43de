"""Label corruption: closed-set flips via a transition matrix, plus
open-set contamination where whole classes leave the known label space.

Closed noise resamples each label from row y of a row-stochastic matrix Q.
Open-set construction declares the last classes out-of-distribution (OOD),
relabels their samples uniformly into the surviving known classes, and
applies closed noise to the rest. Ground truth (status, true class) rides
along for later scoring; OOD samples keep their original class id, which is
>= the shrunken known-class count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset, SampleStatus
from .errors import ShapeError

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class NoiseSpec:
    """How to corrupt annotated labels."""

    kind: str = "symmetric"  # symmetric | asymmetric
    closed_rate: float = 0.0
    open_set: bool = False
    open_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("symmetric", "asymmetric"):
            raise ValueError(f"kind must be symmetric or asymmetric, got {self.kind!r}")
        if not 0.0 <= self.closed_rate <= 1.0:
            raise ValueError(f"closed_rate must be in [0, 1], got {self.closed_rate}")
        if not 0.0 <= self.open_fraction < 1.0:
            raise ValueError(
                f"open_fraction must be in [0, 1), got {self.open_fraction}"
            )

    @property
    def overall_rate(self) -> float:
        """Expected fraction of wrong training labels."""
        if self.open_set:
            return self.open_fraction + (1.0 - self.open_fraction) * self.closed_rate
        return self.closed_rate


def transition_matrix(spec: NoiseSpec, num_classes: int) -> np.ndarray:
    """Row-stochastic Q with Q[i, j] = P(annotated j | true i)."""
    c = int(num_classes)
    if c < 2:
        raise ShapeError(f"need at least 2 classes for noise, got {c}")
    rate = spec.closed_rate
    if spec.kind == "symmetric":
        q = np.full((c, c), rate / (c - 1))
        np.fill_diagonal(q, 1.0 - rate)
    else:
        q = np.eye(c) * (1.0 - rate)
        for i in range(c):
            q[i, (i + 1) % c] += rate
    return q


def _check_row_stochastic(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ShapeError(f"Q must be square, got shape {q.shape}")
    if np.any(q < -ROW_SUM_TOL):
        raise ValueError("Q has negative entries")
    if np.max(np.abs(q.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
        raise ValueError("Q rows must sum to 1")
    return q


def _resample_labels(
    labels: np.ndarray, q: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Draw one label per sample from the Q row of its current label."""
    cdf = np.cumsum(q, axis=1)
    cdf[:, -1] = 1.0  # guard against round-off at the top end
    u = rng.uniform(size=labels.shape[0])
    new = np.empty_like(labels)
    for i, (lab, ui) in enumerate(zip(labels, u)):
        new[i] = np.searchsorted(cdf[lab], ui, side="right")
    return np.minimum(new, q.shape[0] - 1)


def inject_closed_noise(
    dataset: LabeledDataset, spec: NoiseSpec, q: np.ndarray | None = None
) -> LabeledDataset:
    """Corrupt labels in the known space only; features untouched."""
    if spec.open_set:
        raise ValueError("inject_closed_noise handles closed-set specs only")
    q = transition_matrix(spec, dataset.num_classes) if q is None else q
    q = _check_row_stochastic(q)
    if q.shape[0] != dataset.num_classes:
        raise ShapeError(
            f"Q size {q.shape[0]} does not match num_classes {dataset.num_classes}"
        )
    out = dataset.copy()
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(1,)))
    out.labels = _resample_labels(dataset.labels, q, rng)
    flipped = out.labels != dataset.true_class
    out.status = np.where(
        flipped, int(SampleStatus.CLOSED), int(SampleStatus.CLEAN)
    ).astype(np.int64)
    return out


def build_openset_dataset(
    train: LabeledDataset, test: LabeledDataset, spec: NoiseSpec
) -> tuple[LabeledDataset, LabeledDataset]:
    """Open-set corruption of the train split; test keeps only known classes.

    The last ``open_fraction * C_total`` classes (must be a whole number)
    become OOD. Their train samples are relabeled uniformly at random into
    the surviving classes; everything else gets closed noise at
    ``spec.closed_rate``. The test split drops OOD classes entirely and
    stays clean.
    """
    if not spec.open_set:
        raise ValueError("spec.open_set must be true for open-set construction")
    c_total = train.num_classes
    k_exact = spec.open_fraction * c_total
    k = int(round(k_exact))
    if abs(k_exact - k) > 1e-9:
        raise ValueError(
            f"open_fraction * num_classes = {k_exact} is not a whole number"
        )
    c_known = c_total - k
    if c_known < 2:
        raise ValueError(f"too few known classes left ({c_known}) after open split")

    is_ood = train.true_class >= c_known
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(2,)))

    labels = train.labels.copy()
    status = np.full(len(train), int(SampleStatus.CLEAN), dtype=np.int64)
    labels[is_ood] = rng.integers(0, c_known, size=int(is_ood.sum()))
    status[is_ood] = int(SampleStatus.OPEN)

    if spec.closed_rate > 0 and not np.all(is_ood):
        closed_spec = NoiseSpec(
            kind=spec.kind, closed_rate=spec.closed_rate, seed=spec.seed
        )
        q = transition_matrix(closed_spec, c_known)
        rng_c = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(3,)))
        idx = np.flatnonzero(~is_ood)
        labels[idx] = _resample_labels(labels[idx], q, rng_c)
        flipped = labels[idx] != train.true_class[idx]
        status[idx[flipped]] = int(SampleStatus.CLOSED)

    train_out = LabeledDataset(
        features=train.features.copy(),
        labels=labels,
        true_class=train.true_class.copy(),
        status=status,
        num_classes=c_known,
        split="train",
    )

    keep = test.true_class < c_known
    test_out = LabeledDataset(
        features=test.features[keep].copy(),
        labels=test.true_class[keep].copy(),
        true_class=test.true_class[keep].copy(),
        status=np.zeros(int(keep.sum()), dtype=np.int64),
        num_classes=c_known,
        split="test",
    )
    return train_out, test_out
