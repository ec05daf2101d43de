"""Two stochastic views of each sample: weak and strong feature augmentation.

The weak view adds small Gaussian jitter. The strong view adds larger jitter
and then zeroes a fixed fraction of coordinates per row (jitter first, mask
second). Augmentation noise is a pure function of (policy seed, epoch, sample
index, view): each epoch draws full-dataset noise tables from generators keyed
by those values, so a sample's views do not depend on how batches are composed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .model import ModelParams, forward_batch

WEAK, STRONG = 0, 1


@dataclass(frozen=True)
class AugmentPolicy:
    """Noise magnitudes for both views, in feature units."""

    weak_sigma: float = 0.05
    strong_sigma: float = 0.2
    dropout_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.weak_sigma <= self.strong_sigma:
            raise ValueError(
                f"need 0 <= weak_sigma <= strong_sigma, got "
                f"{self.weak_sigma} and {self.strong_sigma}"
            )
        if not 0.0 <= self.dropout_fraction < 1.0:
            raise ValueError(
                f"dropout_fraction must be in [0, 1), got {self.dropout_fraction}"
            )


@dataclass(frozen=True)
class PredictionPair:
    """Pre-softmax scores and probabilities on the two views of a batch."""

    scores_weak: np.ndarray
    scores_strong: np.ndarray
    probs_weak: np.ndarray
    probs_strong: np.ndarray


class Augmenter:
    """Deterministic per-epoch view generator for one dataset."""

    def __init__(self, policy: AugmentPolicy, n_samples: int, dim: int):
        if n_samples <= 0 or dim <= 0:
            raise ShapeError(f"need positive n_samples and dim, got {n_samples}, {dim}")
        self.policy = policy
        self.n_samples = int(n_samples)
        self.dim = int(dim)
        self.n_dropped = int(round(policy.dropout_fraction * dim))
        self._cache_epoch: int | None = None
        self._tables: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    def _rng(self, epoch: int, view: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.policy.seed, spawn_key=(epoch, view))
        return np.random.default_rng(ss)

    def _epoch_tables(self, epoch: int):
        if self._cache_epoch != epoch:
            shape = (self.n_samples, self.dim)
            weak_jitter = self._rng(epoch, WEAK).normal(
                scale=self.policy.weak_sigma, size=shape
            ) if self.policy.weak_sigma > 0 else np.zeros(shape)
            rng_s = self._rng(epoch, STRONG)
            strong_jitter = rng_s.normal(scale=self.policy.strong_sigma, size=shape) \
                if self.policy.strong_sigma > 0 else np.zeros(shape)
            # uniforms drawn after the jitter from the same stream
            drop_scores = rng_s.uniform(size=shape)
            self._tables = (weak_jitter, strong_jitter, drop_scores)
            self._cache_epoch = epoch
        return self._tables

    def _check(self, x: np.ndarray, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.ascontiguousarray(x, dtype=np.float64)
        indices = np.asarray(indices, dtype=np.int64)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ShapeError(f"expected batch of dim {self.dim}, got shape {x.shape}")
        if indices.shape != (x.shape[0],):
            raise ShapeError(
                f"indices shape {indices.shape} does not match batch {x.shape[0]}"
            )
        if len(indices) and (indices.min() < 0 or indices.max() >= self.n_samples):
            raise ShapeError("sample index out of range for this augmenter")
        return x, indices

    def weak_view(self, x: np.ndarray, indices: np.ndarray, epoch: int) -> np.ndarray:
        x, indices = self._check(x, indices)
        weak_jitter, _, _ = self._epoch_tables(epoch)
        return x + weak_jitter[indices]

    def strong_view(self, x: np.ndarray, indices: np.ndarray, epoch: int) -> np.ndarray:
        x, indices = self._check(x, indices)
        _, strong_jitter, drop_scores = self._epoch_tables(epoch)
        out = x + strong_jitter[indices]
        if self.n_dropped > 0:
            # zero the coordinates holding the k smallest uniform scores per row
            order = np.argsort(drop_scores[indices], axis=1, kind="stable")
            rows = np.arange(out.shape[0])[:, None]
            out[rows, order[:, : self.n_dropped]] = 0.0
        return out

    def two_views(
        self, x: np.ndarray, indices: np.ndarray, epoch: int
    ) -> tuple[np.ndarray, np.ndarray]:
        return (
            self.weak_view(x, indices, epoch),
            self.strong_view(x, indices, epoch),
        )


def predict_two_views(
    params: ModelParams,
    augmenter: Augmenter,
    x: np.ndarray,
    indices: np.ndarray,
    epoch: int,
) -> PredictionPair:
    """Model scores and probabilities on both views of a batch."""
    xw, xs = augmenter.two_views(x, indices, epoch)
    cw = forward_batch(params, xw)
    cs = forward_batch(params, xs)
    return PredictionPair(
        scores_weak=cw.logits,
        scores_strong=cs.logits,
        probs_weak=cw.probs,
        probs_strong=cs.probs,
    )
