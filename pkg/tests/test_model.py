"""Feedforward model: init, forward, backprop, checkpoints."""

import math

import numpy as np
import pytest

from noisylab.errors import ShapeError
from noisylab.model import (
    ModelParams,
    accuracy,
    backprop,
    forward,
    forward_batch,
    init_params,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from noisylab.optim import Adam, make_optimizer


def test_init_shapes_and_bounds():
    params = init_params((5, 8, 4, 3), seed=0)
    assert params.layer_sizes == (5, 8, 4, 3)
    assert params.num_classes == 3
    for w, b, (fan_in, fan_out) in zip(
        params.weights, params.biases, [(5, 8), (8, 4), (4, 3)]
    ):
        assert w.shape == (fan_in, fan_out)
        assert b.shape == (fan_out,)
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        assert np.abs(w).max() <= bound
        assert (b == 0).all()


def test_init_deterministic():
    a = init_params((4, 6, 3), seed=11)
    b = init_params((4, 6, 3), seed=11)
    c = init_params((4, 6, 3), seed=12)
    np.testing.assert_array_equal(a.flatten(), b.flatten())
    assert not np.array_equal(a.flatten(), c.flatten())


def test_forward_matches_manual(rng, tiny_net):
    x = rng.normal(size=(7, 4))
    cache = forward_batch(tiny_net, x)
    h = np.tanh(x @ tiny_net.weights[0] + tiny_net.biases[0])
    logits = h @ tiny_net.weights[1] + tiny_net.biases[1]
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    np.testing.assert_allclose(cache.logits, logits, atol=1e-12)
    np.testing.assert_allclose(cache.probs, e / e.sum(axis=1, keepdims=True), atol=1e-12)
    np.testing.assert_allclose(forward(tiny_net, x), cache.probs, atol=1e-15)


def test_predict_is_argmax(rng, tiny_net):
    x = rng.normal(size=(9, 4))
    np.testing.assert_array_equal(
        predict(tiny_net, x), forward(tiny_net, x).argmax(axis=1)
    )


def test_forward_rejects_bad_width(tiny_net):
    with pytest.raises(ShapeError):
        forward(tiny_net, np.zeros((3, 5)))


def test_accuracy_known_and_empty(rng, tiny_net):
    x = rng.normal(size=(20, 4))
    labels = predict(tiny_net, x)
    assert accuracy(tiny_net, x, labels) == 1.0
    wrong = (labels + 1) % 3
    assert accuracy(tiny_net, x, wrong) == 0.0
    assert math.isnan(accuracy(tiny_net, np.zeros((0, 4)), np.zeros(0, dtype=np.int64)))


def test_backprop_matches_central_differences(rng, tiny_net):
    x = rng.normal(size=(5, 4))
    labels = rng.integers(0, 3, size=5)
    targets = np.eye(3)[labels]

    def loss_value(p: ModelParams) -> float:
        probs = forward(p, x)
        clipped = np.clip(probs, 1e-7, 1.0)
        return float(-(targets * np.log(clipped)).sum())

    cache = forward_batch(tiny_net, x)
    grads = backprop(tiny_net, cache, cache.probs - targets)
    step = 1e-6
    for layer, (dw, db) in enumerate(grads):
        for kind, grad in (("w", dw), ("b", db)):
            arr = tiny_net.weights[layer] if kind == "w" else tiny_net.biases[layer]
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + step
                up = loss_value(tiny_net)
                flat[j] = orig - step
                down = loss_value(tiny_net)
                flat[j] = orig
                numeric = (up - down) / (2 * step)
                assert gflat[j] == pytest.approx(numeric, abs=1e-5)


def test_params_copy_is_deep(tiny_net):
    clone = tiny_net.copy()
    clone.weights[0][0, 0] += 1.0
    assert tiny_net.weights[0][0, 0] != clone.weights[0][0, 0]


def test_checkpoint_roundtrip_bitexact(tmp_path, rng, tiny_net):
    opt = Adam(tiny_net)
    grads = [
        (rng.normal(size=w.shape), rng.normal(size=b.shape))
        for w, b in zip(tiny_net.weights, tiny_net.biases)
    ]
    opt.step(tiny_net, grads, 0.01)
    path = str(tmp_path / "ckpt.npz")
    save_checkpoint(path, tiny_net, optimizer=opt, meta={"note": "unit", "epochs": 3})
    loaded, opt_state, meta = load_checkpoint(path)
    np.testing.assert_array_equal(loaded.flatten(), tiny_net.flatten())
    assert loaded.layer_sizes == tiny_net.layer_sizes
    assert meta == {"note": "unit", "epochs": 3}
    fresh = make_optimizer("adam", loaded)
    fresh.load_state(opt_state["arrays"], opt_state["scalars"])
    x = rng.normal(size=(4, 4))
    more = [
        (np.ones_like(w), np.ones_like(b))
        for w, b in zip(tiny_net.weights, tiny_net.biases)
    ]
    opt.step(tiny_net, more, 0.01)
    fresh.step(loaded, more, 0.01)
    np.testing.assert_array_equal(loaded.flatten(), tiny_net.flatten())
    np.testing.assert_array_equal(forward(loaded, x), forward(tiny_net, x))


def test_checkpoint_without_optimizer(tmp_path, tiny_net):
    path = str(tmp_path / "bare.npz")
    save_checkpoint(path, tiny_net)
    loaded, opt_state, meta = load_checkpoint(path)
    np.testing.assert_array_equal(loaded.flatten(), tiny_net.flatten())
    assert meta == {}
