# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled compute kernels for the per-batch hot path.

Same surface as ``noisylab._kernels_py``; ``noisylab.backend`` selects the
active module. Matrix products go through BLAS dgemm, everything else is a
fused C loop.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, log2, tanh as ctanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

NAME = "cython"

PROB_FLOOR = 1e-7

cdef double FLOOR = 1e-7
cdef double NEG_INF = -1e308


cdef inline double _clip(double v) nogil:
    if v < FLOOR:
        return FLOOR
    if v > 1.0:
        return 1.0
    return v


def affine(double[:, ::1] x, double[:, ::1] w, double[::1] b):
    """z = x @ w + b for a batch of row vectors."""
    cdef int n = x.shape[0], m = x.shape[1], k = w.shape[1]
    out = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] z = out
    cdef double one = 1.0, zero = 0.0
    cdef int i, j
    if n == 0 or k == 0:
        return out
    if m == 0:
        out[...] = 0.0
    else:
        # row-major C = A@B computed as column-major C^T = B^T A^T
        dgemm("N", "N", &k, &n, &m, &one, &w[0, 0], &k, &x[0, 0], &m,
              &zero, &z[0, 0], &k)
    for i in range(n):
        for j in range(k):
            z[i, j] += b[j]
    return out


def affine_backward(double[:, ::1] g, double[:, ::1] x, double[:, ::1] w):
    """Gradients of an affine layer: returns (dw, db, dx)."""
    cdef int n = g.shape[0], k = g.shape[1], m = x.shape[1]
    dw_arr = np.zeros((m, k), dtype=np.float64)
    db_arr = np.zeros(k, dtype=np.float64)
    dx_arr = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef double[:, ::1] dx = dx_arr
    cdef double one = 1.0, zero = 0.0
    cdef int i, j
    if n > 0 and k > 0:
        if m > 0:
            # dw = x^T @ g  (column-major: dw^T = g^T @ x)
            dgemm("N", "T", &k, &m, &n, &one, &g[0, 0], &k, &x[0, 0], &m,
                  &zero, &dw[0, 0], &k)
            # dx = g @ w^T  (column-major: dx^T = w @ g^T)
            dgemm("T", "N", &m, &n, &k, &one, &w[0, 0], &k, &g[0, 0], &k,
                  &zero, &dx[0, 0], &m)
        for i in range(n):
            for j in range(k):
                db[j] += g[i, j]
    return dw_arr, db_arr, dx_arr


def tanh_forward(double[:, ::1] z):
    cdef int n = z.shape[0], m = z.shape[1]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] a = out
    cdef int i, j
    for i in range(n):
        for j in range(m):
            a[i, j] = ctanh(z[i, j])
    return out


def tanh_backward(double[:, ::1] g, double[:, ::1] a):
    """Backprop through tanh given the forward output ``a``."""
    cdef int n = g.shape[0], m = g.shape[1]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] dz = out
    cdef int i, j
    for i in range(n):
        for j in range(m):
            dz[i, j] = g[i, j] * (1.0 - a[i, j] * a[i, j])
    return out


def softmax(double[:, ::1] scores):
    """Row-wise softmax, max-shifted for stability."""
    cdef int n = scores.shape[0], c = scores.shape[1]
    out = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] p = out
    cdef int i, j
    cdef double hi, tot
    for i in range(n):
        hi = scores[i, 0]
        for j in range(1, c):
            if scores[i, j] > hi:
                hi = scores[i, j]
        tot = 0.0
        for j in range(c):
            p[i, j] = exp(scores[i, j] - hi)
            tot += p[i, j]
        for j in range(c):
            p[i, j] /= tot
    return out


def js_divergence_rows(double[:, ::1] p, double[:, ::1] q):
    """Base-2 Jensen-Shannon divergence per row, in [0, 1].

    Entries of both inputs are clipped to [PROB_FLOOR, 1] first, so
    one-hot vectors are safe to pass directly.
    """
    cdef int n = p.shape[0], c = p.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] d = out
    cdef int i, j
    cdef double a, b, m, acc_p, acc_q
    for i in range(n):
        acc_p = 0.0
        acc_q = 0.0
        for j in range(c):
            a = _clip(p[i, j])
            b = _clip(q[i, j])
            m = 0.5 * (a + b)
            acc_p += a * log2(a / m)
            acc_q += b * log2(b / m)
        d[i] = 0.5 * acc_p + 0.5 * acc_q
    return out


def disagree_rows(double[:, ::1] pw, double[:, ::1] ps):
    """1 where the two views' argmax classes differ (ties -> lowest index)."""
    cdef int n = pw.shape[0], c = pw.shape[1]
    out = np.empty(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] mv = out
    cdef int i, j, aw, as_
    cdef double hw, hs
    for i in range(n):
        aw = 0
        hw = pw[i, 0]
        as_ = 0
        hs = ps[i, 0]
        for j in range(1, c):
            if pw[i, j] > hw:
                hw = pw[i, j]
                aw = j
            if ps[i, j] > hs:
                hs = ps[i, j]
                as_ = j
        mv[i] = 1 if aw != as_ else 0
    return out


def margin_rows(double[:, ::1] aw, double[:, ::1] as_, cnp.int64_t[::1] ref):
    """Mean over two views of a[ref] - max_{k != ref} a[k], per row."""
    cdef int n = aw.shape[0], c = aw.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] mp = out
    cdef int i, j, r
    cdef double best_w, best_s
    for i in range(n):
        r = <int> ref[i]
        best_w = NEG_INF
        best_s = NEG_INF
        for j in range(c):
            if j == r:
                continue
            if aw[i, j] > best_w:
                best_w = aw[i, j]
            if as_[i, j] > best_s:
                best_s = as_[i, j]
        mp[i] = 0.5 * ((aw[i, r] - best_w) + (as_[i, r] - best_s))
    return out


def ce_rows(double[:, ::1] t, double[:, ::1] p):
    """Cross entropy -sum t*log(p) per row, log argument clipped."""
    cdef int n = t.shape[0], c = t.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] v = out
    cdef int i, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(c):
            acc -= t[i, j] * log(_clip(p[i, j]))
        v[i] = acc
    return out


def entropy_rows(double[:, ::1] p):
    """Shannon entropy -sum p*log(p) per row (natural log, clipped)."""
    cdef int n = p.shape[0], c = p.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] v = out
    cdef int i, j
    cdef double acc, a
    for i in range(n):
        acc = 0.0
        for j in range(c):
            a = _clip(p[i, j])
            acc -= a * log(a)
        v[i] = acc
    return out


def symkl_rows(double[:, ::1] pw, double[:, ::1] ps):
    """Symmetrized KL 0.5*(KL(pw||ps) + KL(ps||pw)) per row.

    Written as 0.5 * sum (a-b)*(log a - log b) over clipped entries, which
    is nonnegative term by term.
    """
    cdef int n = pw.shape[0], c = pw.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] v = out
    cdef int i, j
    cdef double acc, a, b
    for i in range(n):
        acc = 0.0
        for j in range(c):
            a = _clip(pw[i, j])
            b = _clip(ps[i, j])
            acc += (a - b) * (log(a) - log(b))
        v[i] = 0.5 * acc
    return out
