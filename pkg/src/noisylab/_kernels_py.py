"""Pure-numpy compute kernels (fallback backend).

Exposes the same surface as the compiled ``noisylab._kernels`` extension;
``noisylab.backend`` picks one of the two at import time. All kernels take
and return C-contiguous float64 arrays.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

#: probabilities are clipped to this floor before any logarithm
PROB_FLOOR = 1e-7


def affine(x, w, b):
    """z = x @ w + b for a batch of row vectors."""
    return x @ w + b


def affine_backward(g, x, w):
    """Gradients of an affine layer: returns (dw, db, dx)."""
    return x.T @ g, g.sum(axis=0), g @ w.T


def tanh_forward(z):
    return np.tanh(z)


def tanh_backward(g, a):
    """Backprop through tanh given the forward output ``a``."""
    return g * (1.0 - a * a)


def softmax(scores):
    """Row-wise softmax, max-shifted for stability."""
    e = np.exp(scores - scores.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def js_divergence_rows(p, q):
    """Base-2 Jensen-Shannon divergence per row, in [0, 1].

    Entries of both inputs are clipped to [PROB_FLOOR, 1] first, so
    one-hot vectors are safe to pass directly.
    """
    pc = np.clip(p, PROB_FLOOR, 1.0)
    qc = np.clip(q, PROB_FLOOR, 1.0)
    m = 0.5 * (pc + qc)
    kl_pm = np.sum(pc * np.log2(pc / m), axis=1)
    kl_qm = np.sum(qc * np.log2(qc / m), axis=1)
    return 0.5 * kl_pm + 0.5 * kl_qm


def disagree_rows(pw, ps):
    """1 where the two views' argmax classes differ (ties -> lowest index)."""
    return (np.argmax(pw, axis=1) != np.argmax(ps, axis=1)).astype(np.uint8)


def margin_rows(aw, as_, ref):
    """Mean over two views of a[ref] - max_{k != ref} a[k], per row."""

    def one_view(a):
        idx = np.arange(a.shape[0])
        top = a[idx, ref]
        rest = a.copy()
        rest[idx, ref] = -np.inf
        return top - rest.max(axis=1)

    return 0.5 * (one_view(aw) + one_view(as_))


def ce_rows(t, p):
    """Cross entropy -sum t*log(p) per row, log argument clipped."""
    return -np.sum(t * np.log(np.clip(p, PROB_FLOOR, 1.0)), axis=1)


def entropy_rows(p):
    """Shannon entropy -sum p*log(p) per row (natural log, clipped)."""
    pc = np.clip(p, PROB_FLOOR, 1.0)
    return -np.sum(pc * np.log(pc), axis=1)


def symkl_rows(pw, ps):
    """Symmetrized KL 0.5*(KL(pw||ps) + KL(ps||pw)) per row.

    Written as 0.5 * sum (a-b)*(log a - log b) over clipped entries, which
    is nonnegative term by term.
    """
    a = np.clip(pw, PROB_FLOOR, 1.0)
    b = np.clip(ps, PROB_FLOOR, 1.0)
    return 0.5 * np.sum((a - b) * (np.log(a) - np.log(b)), axis=1)
