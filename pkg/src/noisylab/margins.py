"""Margin-guided split of the noisy set into OOD, ID-High, and ID-Rest.

Cross-view argmax disagreement flags out-of-distribution samples; the
surviving in-distribution samples are ranked by an averaged prediction
margin (reference-class score minus best other-class score, averaged over
the two views). Argmax ties always break to the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels as K
from .errors import ShapeError


@dataclass(frozen=True)
class MarginConfig:
    """Margin threshold plus the two resolution switches.

    ``margin_scale`` picks which per-class scores enter the margin:
    softmax probabilities (bounded, default) or raw pre-softmax scores.
    ``reference`` picks the class whose margin is measured: the argmax of
    the mean two-view prediction (default) or the annotated label.
    """

    tau_p: float = 0.9
    margin_scale: str = "probability"  # probability | raw-score
    reference: str = "mean-argmax"  # mean-argmax | annotated

    def __post_init__(self):
        if not 0.0 < self.tau_p < 1.0:
            raise ValueError(f"tau_p must be in (0, 1), got {self.tau_p}")
        if self.margin_scale not in ("probability", "raw-score"):
            raise ValueError(f"bad margin_scale {self.margin_scale!r}")
        if self.reference not in ("mean-argmax", "annotated"):
            raise ValueError(f"bad reference {self.reference!r}")


@dataclass
class Partition:
    """Disjoint batch positions: clean, ID-high, ID-rest, OOD."""

    clean: np.ndarray
    id_high: np.ndarray
    id_rest: np.ndarray
    ood: np.ndarray
    epoch: int = 0

    def counts(self) -> tuple[int, int, int, int]:
        return (
            len(self.clean),
            len(self.id_high),
            len(self.id_rest),
            len(self.ood),
        )

    def total(self) -> int:
        return sum(self.counts())


def _check_pair(weak: np.ndarray, strong: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    weak = np.ascontiguousarray(weak, dtype=np.float64)
    strong = np.ascontiguousarray(strong, dtype=np.float64)
    if weak.ndim != 2 or weak.shape != strong.shape:
        raise ShapeError(
            f"view shapes must match and be 2-d, got {weak.shape} and {strong.shape}"
        )
    if weak.shape[1] < 2:
        raise ShapeError("need at least 2 classes for margins")
    return weak, strong


def view_disagreement(weak_probs: np.ndarray, strong_probs: np.ndarray) -> np.ndarray:
    """1 where the two views' argmax classes differ, else 0, per row."""
    weak, strong = _check_pair(weak_probs, strong_probs)
    return K.disagree_rows(weak, strong)


def reference_class(
    weak_probs: np.ndarray,
    strong_probs: np.ndarray,
    labels: np.ndarray | None,
    config: MarginConfig,
) -> np.ndarray:
    """Class whose margin is measured, per row."""
    if config.reference == "annotated":
        if labels is None:
            raise ShapeError("annotated reference requires labels")
        return np.asarray(labels, dtype=np.int64)
    weak, strong = _check_pair(weak_probs, strong_probs)
    return np.argmax(weak + strong, axis=1).astype(np.int64)


def prediction_margin(
    weak_scores: np.ndarray, strong_scores: np.ndarray, ref: np.ndarray
) -> np.ndarray:
    """Per-view margin of the reference class, averaged over the two views."""
    weak, strong = _check_pair(weak_scores, strong_scores)
    ref = np.ascontiguousarray(ref, dtype=np.int64)
    if ref.shape != (weak.shape[0],):
        raise ShapeError(f"ref shape {ref.shape} does not match batch")
    if ref.size and (ref.min() < 0 or ref.max() >= weak.shape[1]):
        raise ShapeError("reference class out of range")
    return K.margin_rows(weak, strong, ref)


def compute_margin_stats(
    pair, config: MarginConfig, labels: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """(m_v, m_p) for a batch PredictionPair, honoring both config switches."""
    m_v = view_disagreement(pair.probs_weak, pair.probs_strong)
    ref = reference_class(pair.probs_weak, pair.probs_strong, labels, config)
    if config.margin_scale == "probability":
        m_p = prediction_margin(pair.probs_weak, pair.probs_strong, ref)
    else:
        m_p = prediction_margin(pair.scores_weak, pair.scores_strong, ref)
    return m_v, m_p


def partition_noisy(
    noisy_ids: np.ndarray,
    m_v: np.ndarray,
    m_p: np.ndarray,
    config: MarginConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split noisy positions into (ood, id_high, id_rest).

    ``m_v`` and ``m_p`` are indexed by batch position, like ``noisy_ids``.
    Disagreement wins over margin: a disagreeing sample is OOD no matter how
    large its margin.
    """
    noisy_ids = np.asarray(noisy_ids, dtype=np.int64)
    is_ood = m_v[noisy_ids].astype(bool)
    ood = noisy_ids[is_ood]
    id_ids = noisy_ids[~is_ood]
    high_mask = m_p[id_ids] > config.tau_p
    return ood, id_ids[high_mask], id_ids[~high_mask]
