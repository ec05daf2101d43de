"""Numeric kernels: frozen values, straight-line re-derivations, backend parity."""

import math

import numpy as np
import pytest
from hypothesis import given

from conftest import prob_rows, random_probs
from noisylab import _kernels_py as K
from noisylab.backend import kernels as active

try:
    from noisylab import _kernels as KC

    HAVE_CYTHON = True
except ImportError:
    KC = None
    HAVE_CYTHON = False

FLOOR = K.PROB_FLOOR


def manual_js(p, q):
    total = 0.0
    for a, b in zip(p, q):
        a = min(max(float(a), FLOOR), 1.0)
        b = min(max(float(b), FLOOR), 1.0)
        m = 0.5 * (a + b)
        total += 0.5 * a * math.log2(a / m) + 0.5 * b * math.log2(b / m)
    return total


def test_softmax_frozen_pair():
    out = K.softmax(np.array([[2.0, 0.0]]))
    np.testing.assert_allclose(out[0], [0.8807970779778823, 0.1192029220221177], rtol=1e-12)


def test_softmax_rows_sum_to_one(rng):
    z = rng.normal(size=(40, 7)) * 10
    out = K.softmax(z)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)
    assert (out > 0).all()


def test_softmax_shift_invariance(rng):
    z = rng.normal(size=(5, 4))
    np.testing.assert_allclose(K.softmax(z), K.softmax(z + 100.0), atol=1e-12)


def test_affine_matches_numpy(rng):
    x = rng.normal(size=(6, 4))
    w = rng.normal(size=(4, 3))
    b = rng.normal(size=3)
    np.testing.assert_allclose(K.affine(x, w, b), x @ w + b, atol=1e-12)


def test_affine_backward_matches_numpy(rng):
    x = rng.normal(size=(6, 4))
    w = rng.normal(size=(4, 3))
    g = rng.normal(size=(6, 3))
    dw, db, dx = K.affine_backward(g, x, w)
    np.testing.assert_allclose(dw, x.T @ g, atol=1e-12)
    np.testing.assert_allclose(db, g.sum(axis=0), atol=1e-12)
    np.testing.assert_allclose(dx, g @ w.T, atol=1e-12)


def test_tanh_forward_backward(rng):
    z = rng.normal(size=(5, 6))
    a = K.tanh_forward(z)
    np.testing.assert_allclose(a, np.tanh(z), atol=1e-12)
    g = rng.normal(size=(5, 6))
    np.testing.assert_allclose(K.tanh_backward(g, a), g * (1 - a**2), atol=1e-12)


@given(prob_rows())
def test_js_rows_match_straight_line(p):
    q = np.roll(p, 1, axis=1)
    got = K.js_divergence_rows(p, q)
    want = [manual_js(pr, qr) for pr, qr in zip(p, q)]
    np.testing.assert_allclose(got, want, atol=1e-12)


@given(prob_rows())
def test_js_rows_bounds_and_symmetry(p):
    q = np.roll(p, 1, axis=1)
    d_pq = K.js_divergence_rows(p, q)
    d_qp = K.js_divergence_rows(q, p)
    assert (d_pq >= 0).all() and (d_pq <= 1.0).all()
    np.testing.assert_allclose(d_pq, d_qp, atol=1e-12)


def test_js_zero_iff_equal(rng):
    p = random_probs(rng, 10, 5)
    np.testing.assert_allclose(K.js_divergence_rows(p, p), 0.0, atol=1e-12)
    q = p.copy()
    q[:, [0, 1]] = q[:, [1, 0]] + np.array([0.05, -0.05])
    q /= q.sum(axis=1, keepdims=True)
    assert (K.js_divergence_rows(p, q) > 1e-6).all()


def test_js_disjoint_onehots_near_one():
    p = np.array([[1.0, 0.0, 0.0]])
    q = np.array([[0.0, 1.0, 0.0]])
    d = K.js_divergence_rows(p, q)[0]
    # the probability floor keeps this a hair under 1.0
    assert d == pytest.approx(1.0, abs=1e-5)
    assert d < 1.0


def test_ce_entropy_rows_frozen():
    t = np.array([[1.0, 0.0]])
    p = np.array([[0.9, 0.1]])
    assert K.ce_rows(t, p)[0] == pytest.approx(-math.log(0.9), rel=1e-12)
    want_h = -(0.9 * math.log(0.9) + 0.1 * math.log(0.1))
    assert K.entropy_rows(p)[0] == pytest.approx(want_h, rel=1e-12)


def test_symkl_rows_frozen():
    pw = np.array([[0.9, 0.1]])
    ps = np.array([[0.6, 0.4]])
    want = 0.5 * ((0.9 - 0.6) * math.log(0.9 / 0.6) + (0.1 - 0.4) * math.log(0.1 / 0.4))
    assert K.symkl_rows(pw, ps)[0] == pytest.approx(want, rel=1e-12)
    assert K.symkl_rows(pw, pw)[0] == pytest.approx(0.0, abs=1e-15)


@given(prob_rows())
def test_symkl_rows_nonnegative(p):
    q = np.roll(p, 1, axis=1)
    assert (K.symkl_rows(p, q) >= 0).all()


def test_disagree_rows_tie_uses_lowest_index():
    pw = np.array([[0.5, 0.5], [0.4, 0.6]])
    ps = np.array([[0.6, 0.4], [0.5, 0.5]])
    # ties resolve to index 0 in both views
    np.testing.assert_array_equal(K.disagree_rows(pw, ps), [0, 1])


def test_margin_rows_frozen():
    aw = np.array([[0.95, 0.05]])
    as_ = np.array([[0.75, 0.25]])
    ref = np.array([0], dtype=np.int64)
    got = K.margin_rows(aw, as_, ref)[0]
    assert got == pytest.approx(0.5 * ((0.95 - 0.05) + (0.75 - 0.25)), rel=1e-12)


def test_margin_rows_reference_not_argmax():
    aw = np.array([[0.2, 0.8]])
    as_ = np.array([[0.3, 0.7]])
    ref = np.array([0], dtype=np.int64)
    # margin against the best other class goes negative
    got = K.margin_rows(aw, as_, ref)[0]
    assert got == pytest.approx(0.5 * ((0.2 - 0.8) + (0.3 - 0.7)), rel=1e-12)


@pytest.mark.skipif(not HAVE_CYTHON, reason="compiled backend not built")
def test_backend_parity(rng):
    x = rng.normal(size=(12, 6))
    w = rng.normal(size=(6, 5))
    b = rng.normal(size=5)
    g = rng.normal(size=(12, 5))
    np.testing.assert_allclose(KC.affine(x, w, b), K.affine(x, w, b), atol=1e-10)
    for got, want in zip(KC.affine_backward(g, x, w), K.affine_backward(g, x, w)):
        np.testing.assert_allclose(got, want, atol=1e-10)
    z = rng.normal(size=(9, 4)) * 5
    np.testing.assert_allclose(KC.softmax(z), K.softmax(z), atol=1e-12)
    p = random_probs(rng, 9, 4)
    q = random_probs(rng, 9, 4)
    t = random_probs(rng, 9, 4)
    ref = rng.integers(0, 4, size=9)
    np.testing.assert_allclose(
        KC.js_divergence_rows(p, q), K.js_divergence_rows(p, q), atol=1e-12
    )
    np.testing.assert_allclose(KC.ce_rows(t, p), K.ce_rows(t, p), atol=1e-12)
    np.testing.assert_allclose(KC.entropy_rows(p), K.entropy_rows(p), atol=1e-12)
    np.testing.assert_allclose(KC.symkl_rows(p, q), K.symkl_rows(p, q), atol=1e-12)
    np.testing.assert_array_equal(KC.disagree_rows(p, q), K.disagree_rows(p, q))
    np.testing.assert_allclose(
        KC.margin_rows(p, q, ref), K.margin_rows(p, q, ref), atol=1e-12
    )
    a = K.tanh_forward(z)
    np.testing.assert_allclose(KC.tanh_forward(z), a, atol=1e-12)
    gz = rng.normal(size=z.shape)
    np.testing.assert_allclose(KC.tanh_backward(gz, a), K.tanh_backward(gz, a), atol=1e-12)


def test_active_kernels_expose_name():
    assert active.NAME in ("cython", "python")
