"""Target construction: smoothed labels for clean samples, sharpened
two-view pseudo-labels for confidently predicted in-distribution samples.
OOD and ID-rest samples receive no target."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

SMOOTHED, PSEUDO = "smoothed-annotated", "pseudo"


@dataclass(frozen=True)
class RelabelConfig:
    epsilon: float = 0.1
    tau: float = 0.5
    sharpen_after_mean: bool = True

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")


@dataclass(frozen=True)
class TargetDistribution:
    """A training target: probability rows plus where they came from."""

    probs: np.ndarray
    origin: str  # smoothed-annotated | pseudo

    def __post_init__(self):
        if self.origin not in (SMOOTHED, PSEUDO):
            raise ValueError(f"bad origin {self.origin!r}")
        p = self.probs
        if p.ndim not in (1, 2):
            raise ShapeError(f"targets must be 1-d or 2-d, got shape {p.shape}")
        if np.any(p < 0):
            raise ValueError("target entries must be nonnegative")
        sums = p.sum(axis=-1)
        if np.max(np.abs(sums - 1.0)) > 1e-9:
            raise ValueError("target rows must sum to 1 within 1e-9")


def smooth_labels(labels: np.ndarray, num_classes: int, epsilon: float) -> np.ndarray:
    """Row targets with 1 - eps at the annotated class, eps/(C-1) elsewhere."""
    labels = np.asarray(labels, dtype=np.int64)
    c = int(num_classes)
    if c < 2:
        raise ShapeError(f"need at least 2 classes, got {c}")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ShapeError("label out of range")
    out = np.full((labels.shape[0], c), epsilon / (c - 1))
    out[np.arange(labels.shape[0]), labels] = 1.0 - epsilon
    return out


def sharpen(p: np.ndarray, tau: float) -> np.ndarray:
    """Raise rows to the power 1/tau and renormalize."""
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    p = np.asarray(p, dtype=np.float64)
    powered = p ** (1.0 / tau)
    return powered / powered.sum(axis=-1, keepdims=True)


def pseudo_label(
    weak_probs: np.ndarray, strong_probs: np.ndarray, config: RelabelConfig
) -> TargetDistribution:
    """Mean of the two views, optionally sharpened, tagged pseudo."""
    weak = np.asarray(weak_probs, dtype=np.float64)
    strong = np.asarray(strong_probs, dtype=np.float64)
    if weak.shape != strong.shape:
        raise ShapeError(f"view shapes differ: {weak.shape} vs {strong.shape}")
    if config.sharpen_after_mean:
        mixed = sharpen(0.5 * (weak + strong), config.tau)
    else:
        mixed = 0.5 * (sharpen(weak, config.tau) + sharpen(strong, config.tau))
    return TargetDistribution(probs=mixed, origin=PSEUDO)


def clean_targets(
    labels: np.ndarray, num_classes: int, config: RelabelConfig
) -> TargetDistribution:
    """Smoothed annotated labels for the clean set."""
    return TargetDistribution(
        probs=smooth_labels(labels, num_classes, config.epsilon), origin=SMOOTHED
    )
