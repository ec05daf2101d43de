"""Clean-sample selection from per-sample statistics.

Every sample gets a JS-divergence-based clean probability P and an
annotated-class confidence s. The clean set is the union of the small-loss
rule (P above tau_s) and the high-confidence rule (s above tau_h); both
comparisons are strict, ties go to noisy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels as K
from .errors import ShapeError

SUM_TOL = 1e-6


@dataclass(frozen=True)
class SelectionThresholds:
    """Cutoffs for the two clean-selection rules."""

    tau_s: float = 0.75
    tau_h: float = 0.9

    def __post_init__(self):
        for name, v in (("tau_s", self.tau_s), ("tau_h", self.tau_h)):
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")


@dataclass
class SampleStats:
    """Per-sample statistics for one batch, parallel arrays.

    ``d`` is the base-2 JS divergence between prediction and one-hot label,
    ``p_clean`` is 1 - d, ``s`` is the predicted probability of the annotated
    class. ``m_v`` and ``m_p`` (view disagreement, averaged margin) are filled
    by the margin module and may be None when only selection ran.
    """

    d: np.ndarray
    p_clean: np.ndarray
    s: np.ndarray
    m_v: np.ndarray | None = None
    m_p: np.ndarray | None = None

    def __len__(self) -> int:
        return self.d.shape[0]


def _check_vector_pair(p: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.ndim != 1 or y.ndim != 1 or p.shape != y.shape:
        raise ShapeError(f"expected equal-length vectors, got {p.shape} and {y.shape}")
    for name, v in (("p", p), ("y", y)):
        if abs(float(v.sum()) - 1.0) > SUM_TOL:
            raise ValueError(f"{name} must sum to 1 within {SUM_TOL}")
    return p, y


def js_divergence(p: np.ndarray, y: np.ndarray) -> float:
    """Base-2 Jensen-Shannon divergence, in [0, 1], for one vector pair."""
    p, y = _check_vector_pair(p, y)
    return float(K.js_divergence_rows(p[None, :], y[None, :])[0])


def clean_probability(p: np.ndarray, y: np.ndarray) -> float:
    return 1.0 - js_divergence(p, y)


def confidence_score(probs: np.ndarray, y: int) -> float:
    """Predicted probability of the annotated class."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1:
        raise ShapeError(f"expected a probability vector, got shape {probs.shape}")
    if not 0 <= y < probs.shape[0]:
        raise ShapeError(f"class index {y} out of range for {probs.shape[0]} classes")
    return float(probs[y])


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ShapeError("label out of range for one-hot encoding")
    out = np.zeros((labels.shape[0], num_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def compute_selection_stats(
    weak_probs: np.ndarray,
    strong_probs: np.ndarray,
    labels: np.ndarray,
    stat_view: str = "weak",
) -> SampleStats:
    """d, P, s for a batch. ``stat_view`` picks which prediction is scored:
    the weak view (default) or the mean of both views."""
    if stat_view == "weak":
        probs = weak_probs
    elif stat_view == "mean":
        probs = 0.5 * (weak_probs + strong_probs)
    else:
        raise ValueError(f"stat_view must be weak or mean, got {stat_view!r}")
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ShapeError(
            f"probs {probs.shape} and labels {labels.shape} are inconsistent"
        )
    y = one_hot(labels, probs.shape[1])
    d = K.js_divergence_rows(probs, y)
    s = probs[np.arange(probs.shape[0]), labels]
    return SampleStats(d=d, p_clean=1.0 - d, s=s.copy())


def partition_clean(
    stats: SampleStats,
    thresholds: SelectionThresholds,
    rule: str = "union",
) -> tuple[np.ndarray, np.ndarray]:
    """Split batch positions into (clean, noisy) index arrays.

    ``union`` is the full rule; ``small-loss`` keeps only the P > tau_s
    branch (used by the selection ablation).
    """
    small_loss = stats.p_clean > thresholds.tau_s
    if rule == "union":
        clean_mask = small_loss | (stats.s > thresholds.tau_h)
    elif rule == "small-loss":
        clean_mask = small_loss
    else:
        raise ValueError(f"rule must be union or small-loss, got {rule!r}")
    idx = np.arange(len(stats))
    return idx[clean_mask], idx[~clean_mask]
