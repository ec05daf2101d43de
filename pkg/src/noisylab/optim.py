"""First-order optimizers over ModelParams.

Both optimizers mutate the parameter arrays in place. The learning rate is
passed per step so schedules live in the trainer, not here.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError, ShapeError
from .model import ModelParams


class PlainSGD:
    """Vanilla gradient descent: p <- p - lr * g."""

    name = "sgd"

    def __init__(self, params: ModelParams):
        self._n = len(params.weights)

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {}

    def state_scalars(self) -> dict:
        return {"name": self.name}

    def load_state(self, arrays: dict, scalars: dict) -> None:
        pass

    def step(
        self,
        params: ModelParams,
        grads: list[tuple[np.ndarray, np.ndarray]],
        lr: float,
    ) -> None:
        if len(grads) != self._n:
            raise ShapeError(f"expected {self._n} gradient pairs, got {len(grads)}")
        for i, (dw, db) in enumerate(grads):
            params.weights[i] -= lr * dw
            params.biases[i] -= lr * db


class Adam:
    """Adam with bias correction (Kingma & Ba defaults unless overridden)."""

    name = "adam"

    def __init__(
        self,
        params: ModelParams,
        momentum: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.beta1 = float(momentum)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self._m = [
            (np.zeros_like(w), np.zeros_like(b))
            for w, b in zip(params.weights, params.biases)
        ]
        self._v = [
            (np.zeros_like(w), np.zeros_like(b))
            for w, b in zip(params.weights, params.biases)
        ]

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i, ((mw, mb), (vw, vb)) in enumerate(zip(self._m, self._v)):
            out[f"m_w{i}"] = mw
            out[f"m_b{i}"] = mb
            out[f"v_w{i}"] = vw
            out[f"v_b{i}"] = vb
        return out

    def state_scalars(self) -> dict:
        return {
            "name": self.name,
            "t": self.t,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
        }

    def load_state(self, arrays: dict, scalars: dict) -> None:
        self.t = int(scalars["t"])
        self.beta1 = float(scalars["beta1"])
        self.beta2 = float(scalars["beta2"])
        self.eps = float(scalars["eps"])
        for i in range(len(self._m)):
            self._m[i] = (
                np.ascontiguousarray(arrays[f"m_w{i}"]),
                np.ascontiguousarray(arrays[f"m_b{i}"]),
            )
            self._v[i] = (
                np.ascontiguousarray(arrays[f"v_w{i}"]),
                np.ascontiguousarray(arrays[f"v_b{i}"]),
            )

    def step(
        self,
        params: ModelParams,
        grads: list[tuple[np.ndarray, np.ndarray]],
        lr: float,
    ) -> None:
        if len(grads) != len(self._m):
            raise ShapeError(
                f"expected {len(self._m)} gradient pairs, got {len(grads)}"
            )
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        # fold both bias corrections into the step size
        alpha = lr * np.sqrt(1.0 - b2**self.t) / (1.0 - b1**self.t)
        for i, (dw, db) in enumerate(grads):
            mw, mb = self._m[i]
            vw, vb = self._v[i]
            mw *= b1
            mw += (1.0 - b1) * dw
            mb *= b1
            mb += (1.0 - b1) * db
            vw *= b2
            vw += (1.0 - b2) * dw * dw
            vb *= b2
            vb += (1.0 - b2) * db * db
            params.weights[i] -= alpha * mw / (np.sqrt(vw) + self.eps)
            params.biases[i] -= alpha * mb / (np.sqrt(vb) + self.eps)


def make_optimizer(name: str, params: ModelParams, momentum: float = 0.9):
    name = name.lower()
    if name == "sgd":
        return PlainSGD(params)
    if name == "adam":
        return Adam(params, momentum=momentum)
    raise ValueError(f"unknown optimizer {name!r} (expected sgd or adam)")


def apply_gradients(
    optimizer,
    params: ModelParams,
    grads: list[tuple[np.ndarray, np.ndarray]],
    lr: float,
    context: str = "",
) -> None:
    """Run one optimizer step, then verify the parameters stayed finite."""
    optimizer.step(params, grads, lr)
    if not params.all_finite():
        where = f" during {context}" if context else ""
        raise NumericalError(f"non-finite parameters after optimizer step{where}")
