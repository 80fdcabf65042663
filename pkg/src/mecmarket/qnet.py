"""A small fully connected Q-network with hand-written gradients.

Two hidden rectified-linear layers and a linear output head, float64
throughout, plain fixed-step gradient descent — no framework, no adaptive
moments — so training runs are bit-reproducible from the seed.
"""
from __future__ import annotations

import numpy as np


class QNetwork:
    """Input -> hidden -> hidden -> one Q-value per action."""

    def __init__(self, num_inputs: int, num_actions: int, hidden: int = 64,
                 seed: int = 0) -> None:
        if num_inputs < 1 or num_actions < 1 or hidden < 1:
            raise ValueError("layer sizes must be positive")
        self.num_inputs = num_inputs
        self.num_actions = num_actions
        self.hidden = hidden
        rng = np.random.default_rng(seed)
        self.w1 = self._init_layer(rng, num_inputs, hidden)
        self.b1 = np.zeros(hidden)
        self.w2 = self._init_layer(rng, hidden, hidden)
        self.b2 = np.zeros(hidden)
        self.w3 = self._init_layer(rng, hidden, num_actions)
        self.b3 = np.zeros(num_actions)

    @staticmethod
    def _init_layer(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    # -- forward / backward ---------------------------------------------

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Q-values; accepts one state vector or a batch."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        h1 = np.maximum(x @ self.w1 + self.b1, 0.0)
        h2 = np.maximum(h1 @ self.w2 + self.b2, 0.0)
        return h2 @ self.w3 + self.b3

    def loss_and_gradients(
        self, x: np.ndarray, actions: np.ndarray, targets: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean squared error on the taken actions' Q-values, plus gradients."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        actions = np.asarray(actions, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.float64)
        batch = x.shape[0]

        z1 = x @ self.w1 + self.b1
        h1 = np.maximum(z1, 0.0)
        z2 = h1 @ self.w2 + self.b2
        h2 = np.maximum(z2, 0.0)
        q = h2 @ self.w3 + self.b3

        picked = q[np.arange(batch), actions]
        err = picked - targets
        loss = float(np.mean(err ** 2))

        dq = np.zeros_like(q)
        dq[np.arange(batch), actions] = 2.0 * err / batch
        dw3 = h2.T @ dq
        db3 = dq.sum(axis=0)
        dh2 = (dq @ self.w3.T) * (z2 > 0.0)
        dw2 = h1.T @ dh2
        db2 = dh2.sum(axis=0)
        dh1 = (dh2 @ self.w2.T) * (z1 > 0.0)
        dw1 = x.T @ dh1
        db1 = dh1.sum(axis=0)
        grads = {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2, "w3": dw3, "b3": db3}
        return loss, grads

    def apply_gradients(self, grads: dict[str, np.ndarray], learning_rate: float) -> None:
        for name, grad in grads.items():
            param = getattr(self, name)
            param -= learning_rate * grad

    # -- parameter management -------------------------------------------

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2,
                "w3": self.w3, "b3": self.b3}

    def copy_from(self, other: "QNetwork") -> None:
        for name, param in other.parameters().items():
            setattr(self, name, param.copy())

    def clone(self) -> "QNetwork":
        twin = QNetwork(self.num_inputs, self.num_actions, self.hidden)
        twin.copy_from(self)
        return twin
