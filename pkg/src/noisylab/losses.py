"""The three loss terms, their combination, and analytic gradients.

All losses use natural logs and reduce over the batch as plain sums of
per-sample terms (math.fsum, so the reduction is exact for the given rows
and independent of chunking). Gradients are taken with respect to the
pre-softmax scores; target distributions and partitions are treated as
constants. The clamp floor only affects rows that saturate it, so the
gradient formulas hold everywhere gradient checks operate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import PROB_FLOOR, kernels as K
from .errors import NumericalError, ShapeError

CLEAN_MODES = ("literal", "plus-entropy", "ce-only")


@dataclass(frozen=True)
class LossWeights:
    """Scalar knobs of the composite objective.

    ``lambda1``/``lambda2`` scale the relabeled-sample and consistency terms;
    ``entropy_weight`` is the entropy coefficient inside the relabeled-sample
    loss; ``clean_mode`` picks the clean-set objective: the written form
    CE - H (literal), CE + H, or CE alone.
    """

    lambda1: float = 0.05
    lambda2: float = 0.05
    entropy_weight: float = 0.05
    clean_mode: str = "literal"

    def __post_init__(self):
        for name, v in (
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("entropy_weight", self.entropy_weight),
        ):
            if v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if self.clean_mode not in CLEAN_MODES:
            raise ValueError(f"clean_mode must be one of {CLEAN_MODES}")


@dataclass
class LossBreakdown:
    l_c: float
    l_n: float
    l_cons: float
    l_total: float
    n_clean: int = 0
    n_high: int = 0
    n_cons: int = 0


def _pair(
    a: np.ndarray, b: np.ndarray, names: tuple[str, str]
) -> tuple[np.ndarray, np.ndarray]:
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise ShapeError(
            f"{names[0]} {a.shape} and {names[1]} {b.shape} must match and be 2-d"
        )
    return a, b


def _logp(p: np.ndarray) -> np.ndarray:
    return np.log(np.clip(p, PROB_FLOOR, 1.0))


# -- clean set: cross entropy against smoothed labels, entropy per mode --


def loss_clean_rows(targets: np.ndarray, probs: np.ndarray, mode: str) -> np.ndarray:
    targets, probs = _pair(targets, probs, ("targets", "probs"))
    ce = K.ce_rows(targets, probs)
    if mode == "ce-only":
        return ce
    h = K.entropy_rows(probs)
    if mode == "literal":
        return ce - h
    if mode == "plus-entropy":
        return ce + h
    raise ValueError(f"clean_mode must be one of {CLEAN_MODES}, got {mode!r}")


def loss_clean(targets: np.ndarray, probs: np.ndarray, mode: str = "literal") -> float:
    if targets.shape[0] == 0:
        return 0.0
    return math.fsum(loss_clean_rows(targets, probs, mode))


def loss_clean_grad(targets: np.ndarray, probs: np.ndarray, mode: str) -> np.ndarray:
    """d loss_clean / d scores, rows independent."""
    targets, probs = _pair(targets, probs, ("targets", "probs"))
    g = probs - targets
    if mode == "ce-only":
        return g
    lp = _logp(probs)
    # d(-H)/dz = p * (log p - sum_k p_k log p_k)
    dneg_h = probs * (lp - np.sum(probs * lp, axis=1, keepdims=True))
    if mode == "literal":
        return g + dneg_h
    if mode == "plus-entropy":
        return g - dneg_h
    raise ValueError(f"clean_mode must be one of {CLEAN_MODES}, got {mode!r}")


# -- relabeled set: cross entropy against the mean prediction, plus entropy --


def loss_noisy_rows(
    targets: np.ndarray,
    weak_probs: np.ndarray,
    strong_probs: np.ndarray,
    entropy_weight: float,
) -> np.ndarray:
    weak, strong = _pair(weak_probs, strong_probs, ("weak", "strong"))
    targets, _ = _pair(targets, weak, ("targets", "weak"))
    mean = 0.5 * (weak + strong)
    rows = K.ce_rows(targets, mean)
    if entropy_weight != 0.0:
        rows = rows + entropy_weight * K.entropy_rows(mean)
    return rows


def loss_noisy(
    targets: np.ndarray,
    weak_probs: np.ndarray,
    strong_probs: np.ndarray,
    entropy_weight: float,
) -> float:
    if targets.shape[0] == 0:
        return 0.0
    return math.fsum(loss_noisy_rows(targets, weak_probs, strong_probs, entropy_weight))


def loss_noisy_grad(
    targets: np.ndarray,
    weak_probs: np.ndarray,
    strong_probs: np.ndarray,
    entropy_weight: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients w.r.t. the weak and strong scores."""
    weak, strong = _pair(weak_probs, strong_probs, ("weak", "strong"))
    targets, _ = _pair(targets, weak, ("targets", "weak"))
    mean = np.clip(0.5 * (weak + strong), PROB_FLOOR, 1.0)
    r = targets / mean
    lm = _logp(mean)
    grads = []
    for view in (weak, strong):
        s_ce = np.sum(view * r, axis=1, keepdims=True)
        g = 0.5 * view * (s_ce - r)
        if entropy_weight != 0.0:
            s_h = np.sum(view * lm, axis=1, keepdims=True)
            g = g - entropy_weight * 0.5 * view * (lm - s_h)
        grads.append(g)
    return grads[0], grads[1]


# -- consistency: symmetric KL between the two views --


def loss_consistency_rows(
    weak_probs: np.ndarray, strong_probs: np.ndarray
) -> np.ndarray:
    weak, strong = _pair(weak_probs, strong_probs, ("weak", "strong"))
    return K.symkl_rows(weak, strong)


def loss_consistency(weak_probs: np.ndarray, strong_probs: np.ndarray) -> float:
    if weak_probs.shape[0] == 0:
        return 0.0
    return math.fsum(loss_consistency_rows(weak_probs, strong_probs))


def loss_consistency_grad(
    weak_probs: np.ndarray, strong_probs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    weak, strong = _pair(weak_probs, strong_probs, ("weak", "strong"))
    lw = _logp(weak)
    ls = _logp(strong)
    d = lw - ls
    kl_ws = np.sum(weak * d, axis=1, keepdims=True)
    kl_sw = np.sum(strong * -d, axis=1, keepdims=True)
    gw = 0.5 * (weak * (d - kl_ws) + (weak - strong))
    gs = 0.5 * (strong * (-d - kl_sw) + (strong - weak))
    return gw, gs


def loss_total(
    l_c: float,
    l_n: float,
    l_cons: float,
    weights: LossWeights,
    n_clean: int = 0,
    n_high: int = 0,
    n_cons: int = 0,
) -> LossBreakdown:
    """Combine the three terms; abort on any non-finite component."""
    for name, v in (("L_c", l_c), ("L_n", l_n), ("L_cons", l_cons)):
        if not math.isfinite(v):
            raise NumericalError(f"loss component {name} is non-finite ({v})")
    total = l_c + weights.lambda1 * l_n + weights.lambda2 * l_cons
    return LossBreakdown(
        l_c=l_c,
        l_n=l_n,
        l_cons=l_cons,
        l_total=total,
        n_clean=n_clean,
        n_high=n_high,
        n_cons=n_cons,
    )
