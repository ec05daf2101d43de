"""Central-difference verification of the analytic loss gradients.

The partition and all target distributions are computed once at the
reference parameters and then frozen, mirroring training where targets are
constants of the current step. The check perturbs every parameter entry by
+/- step and compares the numeric slope against backprop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import losses, margins, relabel, selection
from .errors import ShapeError
from .losses import LossWeights
from .margins import MarginConfig
from .model import ModelParams, backprop, forward_batch
from .relabel import RelabelConfig
from .selection import SelectionThresholds

SELECTORS = ("clean", "noisy", "consistency", "total")
DEFAULT_STEP = 1e-5


@dataclass
class GradCheckDetail:
    max_rel_err: float
    n_checked: int
    analytic_norm: float


def _frozen_targets(
    params: ModelParams,
    x_weak: np.ndarray,
    x_strong: np.ndarray,
    labels: np.ndarray,
    selector: str,
    weights: LossWeights,
    relabel_cfg: RelabelConfig,
    thresholds: SelectionThresholds,
    margin_cfg: MarginConfig,
) -> dict:
    """Index sets and target rows, all detached from the parameters."""
    n = x_weak.shape[0]
    pw = forward_batch(params, x_weak).probs
    ps = forward_batch(params, x_strong).probs
    num_classes = pw.shape[1]
    everything = np.arange(n)
    empty = np.empty(0, dtype=np.int64)

    if selector == "clean":
        clean, high = everything, empty
    elif selector == "noisy":
        clean, high = empty, everything
    elif selector == "consistency":
        clean, high = empty, empty
    elif selector == "total":
        stats = selection.compute_selection_stats(pw, ps, labels)
        clean, noisy = selection.partition_clean(stats, thresholds)
        pair = _ArrayPair(pw, ps)
        m_v, m_p = margins.compute_margin_stats(pair, margin_cfg, labels)
        _, high, _ = margins.partition_noisy(noisy, m_v, m_p, margin_cfg)
    else:
        raise ValueError(f"selector must be one of {SELECTORS}, got {selector!r}")

    clean_t = relabel.smooth_labels(labels[clean], num_classes, relabel_cfg.epsilon)
    pseudo_t = (
        relabel.pseudo_label(pw[high], ps[high], relabel_cfg).probs
        if len(high)
        else np.empty((0, num_classes))
    )
    return {"clean": clean, "high": high, "clean_t": clean_t, "pseudo_t": pseudo_t}


class _ArrayPair:
    """Duck-typed PredictionPair when only probabilities exist."""

    def __init__(self, pw: np.ndarray, ps: np.ndarray):
        self.probs_weak = pw
        self.probs_strong = ps
        self.scores_weak = pw
        self.scores_strong = ps


def _loss_value(
    params: ModelParams,
    x_weak: np.ndarray,
    x_strong: np.ndarray,
    frozen: dict,
    selector: str,
    weights: LossWeights,
) -> float:
    pw = forward_batch(params, x_weak).probs
    ps = forward_batch(params, x_strong).probs
    clean, high = frozen["clean"], frozen["high"]
    if selector == "clean":
        return losses.loss_clean(frozen["clean_t"], pw[clean], weights.clean_mode)
    if selector == "noisy":
        return losses.loss_noisy(
            frozen["pseudo_t"], pw[high], ps[high], weights.entropy_weight
        )
    if selector == "consistency":
        return losses.loss_consistency(pw, ps)
    l_c = losses.loss_clean(frozen["clean_t"], pw[clean], weights.clean_mode)
    l_n = losses.loss_noisy(
        frozen["pseudo_t"], pw[high], ps[high], weights.entropy_weight
    )
    l_cons = losses.loss_consistency(pw, ps)
    return l_c + weights.lambda1 * l_n + weights.lambda2 * l_cons


def _analytic_grads(
    params: ModelParams,
    x_weak: np.ndarray,
    x_strong: np.ndarray,
    frozen: dict,
    selector: str,
    weights: LossWeights,
) -> list[tuple[np.ndarray, np.ndarray]]:
    cache_w = forward_batch(params, x_weak)
    cache_s = forward_batch(params, x_strong)
    pw, ps = cache_w.probs, cache_s.probs
    n, c = pw.shape
    gw = np.zeros((n, c))
    gs = np.zeros((n, c))
    clean, high = frozen["clean"], frozen["high"]

    w_c = 1.0 if selector in ("clean", "total") else 0.0
    w_n = (
        1.0
        if selector == "noisy"
        else (weights.lambda1 if selector == "total" else 0.0)
    )
    w_k = (
        1.0
        if selector == "consistency"
        else (weights.lambda2 if selector == "total" else 0.0)
    )

    if w_c and len(clean):
        gw[clean] += w_c * losses.loss_clean_grad(
            frozen["clean_t"], pw[clean], weights.clean_mode
        )
    if w_n and len(high):
        g1, g2 = losses.loss_noisy_grad(
            frozen["pseudo_t"], pw[high], ps[high], weights.entropy_weight
        )
        gw[high] += w_n * g1
        gs[high] += w_n * g2
    if w_k:
        g1, g2 = losses.loss_consistency_grad(pw, ps)
        gw += w_k * g1
        gs += w_k * g2

    grads_w = backprop(params, cache_w, gw)
    grads_s = backprop(params, cache_s, gs)
    return [
        (dw1 + dw2, db1 + db2)
        for (dw1, db1), (dw2, db2) in zip(grads_w, grads_s)
    ]


def gradient_check_detail(
    params: ModelParams,
    x_weak: np.ndarray,
    x_strong: np.ndarray,
    labels: np.ndarray,
    selector: str,
    weights: LossWeights | None = None,
    relabel_cfg: RelabelConfig | None = None,
    thresholds: SelectionThresholds | None = None,
    margin_cfg: MarginConfig | None = None,
    step: float = DEFAULT_STEP,
) -> GradCheckDetail:
    if selector not in SELECTORS:
        raise ValueError(f"selector must be one of {SELECTORS}, got {selector!r}")
    if x_weak.shape[0] == 0:
        raise ShapeError("gradient check needs a nonempty batch")
    weights = weights or LossWeights()
    relabel_cfg = relabel_cfg or RelabelConfig()
    thresholds = thresholds or SelectionThresholds()
    margin_cfg = margin_cfg or MarginConfig()

    frozen = _frozen_targets(
        params, x_weak, x_strong, labels, selector, weights,
        relabel_cfg, thresholds, margin_cfg,
    )
    analytic = _analytic_grads(params, x_weak, x_strong, frozen, selector, weights)

    max_rel = 0.0
    n_checked = 0
    sq_norm = 0.0
    for layer, (dw, db) in enumerate(analytic):
        for kind, grad in (("w", dw), ("b", db)):
            target = (
                params.weights[layer] if kind == "w" else params.biases[layer]
            )
            flat_target = target.reshape(-1)
            flat_grad = grad.reshape(-1)
            sq_norm += float(np.sum(flat_grad**2))
            for j in range(flat_target.shape[0]):
                orig = flat_target[j]
                flat_target[j] = orig + step
                up = _loss_value(params, x_weak, x_strong, frozen, selector, weights)
                flat_target[j] = orig - step
                down = _loss_value(params, x_weak, x_strong, frozen, selector, weights)
                flat_target[j] = orig
                numeric = (up - down) / (2.0 * step)
                a = flat_grad[j]
                rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
                max_rel = max(max_rel, rel)
                n_checked += 1
    return GradCheckDetail(
        max_rel_err=max_rel, n_checked=n_checked, analytic_norm=float(np.sqrt(sq_norm))
    )


def gradient_check(
    params: ModelParams,
    x_weak: np.ndarray,
    x_strong: np.ndarray,
    labels: np.ndarray,
    selector: str,
    **kwargs,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    return gradient_check_detail(
        params, x_weak, x_strong, labels, selector, **kwargs
    ).max_rel_err
