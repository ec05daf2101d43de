"""Small fully connected classifier with tanh hidden layers.

Parameters are plain float64 numpy arrays in row-vector convention
(``z = x @ W + b``). Forward passes cache every layer activation so the
backward pass can run without recomputation. Checkpoints round-trip
bit-exactly through ``.npz`` containers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .backend import kernels as K
from .errors import ShapeError


@dataclass
class ModelParams:
    """Weights and biases for each affine layer, first to last."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        sizes = [self.weights[0].shape[0]]
        sizes.extend(w.shape[1] for w in self.weights)
        return tuple(sizes)

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "ModelParams":
        return ModelParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )


@dataclass
class ForwardCache:
    """Intermediate values from one forward pass.

    ``inputs[i]`` is what layer i consumed; ``hidden[i]`` is the tanh output
    of hidden layer i. ``logits`` and ``probs`` are the final pre- and
    post-softmax rows.
    """

    inputs: list[np.ndarray] = field(default_factory=list)
    hidden: list[np.ndarray] = field(default_factory=list)
    logits: np.ndarray | None = None
    probs: np.ndarray | None = None


def init_params(layer_sizes: tuple[int, ...] | list[int], seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases, from a dedicated seeded generator."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ShapeError(f"need at least input and output sizes, got {sizes}")
    if any(s <= 0 for s in sizes):
        raise ShapeError(f"layer sizes must be positive, got {sizes}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(weights=weights, biases=biases)


def _check_input(params: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"expected 2-d input batch, got shape {x.shape}")
    if x.shape[1] != params.weights[0].shape[0]:
        raise ShapeError(
            f"input dim {x.shape[1]} does not match model dim "
            f"{params.weights[0].shape[0]}"
        )
    return x


def forward_batch(params: ModelParams, x: np.ndarray) -> ForwardCache:
    """Run the batch through every layer, caching activations."""
    x = _check_input(params, x)
    cache = ForwardCache()
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.inputs.append(h)
        z = K.affine(h, w, b)
        if i < last:
            h = K.tanh_forward(z)
            cache.hidden.append(h)
        else:
            cache.logits = z
    cache.probs = K.softmax(cache.logits)
    return cache


def forward(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities for a batch, no cache retained."""
    return forward_batch(params, x).probs


def predict(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Hard label predictions (argmax, ties to the lowest index)."""
    return np.argmax(forward(params, x), axis=1)


def backprop(
    params: ModelParams, cache: ForwardCache, grad_logits: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradients of a scalar loss w.r.t. every (W, b), given dL/dlogits."""
    grad_logits = np.ascontiguousarray(grad_logits, dtype=np.float64)
    if cache.logits is None or grad_logits.shape != cache.logits.shape:
        raise ShapeError(
            f"grad_logits shape {grad_logits.shape} does not match logits"
        )
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params.weights)
    g = grad_logits
    for i in range(len(params.weights) - 1, -1, -1):
        dw, db, dx = K.affine_backward(g, cache.inputs[i], params.weights[i])
        grads[i] = (dw, db)
        if i > 0:
            g = K.tanh_backward(dx, cache.hidden[i - 1])
    return grads


def accuracy(params: ModelParams, x: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax prediction matches ``labels``."""
    if len(labels) == 0:
        return float("nan")
    return float(np.mean(predict(params, x) == np.asarray(labels)))


def save_checkpoint(
    path: str,
    params: ModelParams,
    optimizer=None,
    meta: dict | None = None,
) -> None:
    """Write params, optimizer state, and metadata to an .npz container.

    Round-trips bit-exactly: loading and re-saving produces identical arrays.
    """
    arrays = {}
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    opt_scalars = {}
    if optimizer is not None:
        for key, arr in optimizer.state_arrays().items():
            arrays[f"opt_{key}"] = arr
        opt_scalars = optimizer.state_scalars()
    header = {
        "n_layers": len(params.weights),
        "layer_sizes": list(params.layer_sizes),
        "optimizer": opt_scalars,
        "meta": meta or {},
    }
    arrays["header"] = np.frombuffer(
        json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    from .ioutils import atomic_savez

    atomic_savez(path, **arrays)


def load_checkpoint(path: str) -> tuple[ModelParams, dict, dict]:
    """Read a checkpoint: (params, optimizer state {arrays, scalars}, meta)."""
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode("utf-8"))
        n = int(header["n_layers"])
        weights = [np.ascontiguousarray(data[f"w{i}"]) for i in range(n)]
        biases = [np.ascontiguousarray(data[f"b{i}"]) for i in range(n)]
        opt_arrays = {
            key[4:]: np.ascontiguousarray(data[key])
            for key in data.files
            if key.startswith("opt_")
        }
    params = ModelParams(weights=weights, biases=biases)
    opt_state = {"arrays": opt_arrays, "scalars": header.get("optimizer", {})}
    return params, opt_state, header.get("meta", {})
