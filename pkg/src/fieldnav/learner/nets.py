"""Tiny dense networks in numpy with hand-written backprop.

Everything the trainer differentiates lives here: dense layers, tanh
activations, and the Adam optimizer. Gradients are exact (the test suite
checks every block against central finite differences), float64 throughout.
"""

from __future__ import annotations

import numpy as np


def orthogonal(rng: np.random.Generator, shape: tuple[int, int], gain: float) -> np.ndarray:
    """Orthogonal init (QR of a Gaussian draw), sign-fixed for determinism."""
    a = rng.standard_normal(shape)
    q, r = np.linalg.qr(a if shape[0] >= shape[1] else a.T)
    q = q * np.sign(np.diag(r))
    if shape[0] < shape[1]:
        q = q.T
    return gain * q[: shape[0], : shape[1]]


class MLP:
    """Fixed two-hidden-layer perceptron with tanh activations.

    Parameters are a flat dict of arrays; forward() caches activations so
    backward() can return exact gradients for a given output cotangent.
    """

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator,
                 head_gain: float = 1.0):
        self.in_dim = in_dim
        self.hidden = hidden
        self.params = {
            "W1": orthogonal(rng, (in_dim, hidden), np.sqrt(2.0)),
            "b1": np.zeros(hidden),
            "W2": orthogonal(rng, (hidden, hidden), np.sqrt(2.0)),
            "b2": np.zeros(hidden),
            "W3": orthogonal(rng, (hidden, 1), head_gain),
            "b3": np.zeros(1),
        }

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        p = self.params
        h1 = np.tanh(x @ p["W1"] + p["b1"])
        h2 = np.tanh(h1 @ p["W2"] + p["b2"])
        y = h2 @ p["W3"] + p["b3"]
        return y[:, 0], {"x": x, "h1": h1, "h2": h2}

    def backward(self, cache: dict, dy: np.ndarray) -> dict:
        """Gradients of sum(dy * y) w.r.t. every parameter."""
        p = self.params
        dy = dy[:, None]
        grads = {
            "W3": cache["h2"].T @ dy,
            "b3": dy.sum(axis=0),
        }
        dh2 = (dy @ p["W3"].T) * (1.0 - cache["h2"] ** 2)
        grads["W2"] = cache["h1"].T @ dh2
        grads["b2"] = dh2.sum(axis=0)
        dh1 = (dh2 @ p["W2"].T) * (1.0 - cache["h1"] ** 2)
        grads["W1"] = cache["x"].T @ dh1
        grads["b1"] = dh1.sum(axis=0)
        return grads


class Adam:
    """Adaptive-moment gradient descent over a dict of parameter arrays."""

    def __init__(self, lr: float = 3e-4, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_grads(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale gradients in place to a maximum global norm; returns the norm."""
    norm = global_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm
