"""Tiny numpy MLP with hand-written backprop, plus observation normalization.

The policy stack needs exact gradients (they are checked against finite
differences), flat parameter access for those checks, and JSON round-trips
for checkpoints.  Hidden activations are tanh, the output layer is linear.
"""

from __future__ import annotations

import numpy as np


class Mlp:
    def __init__(self, layer_sizes, rng: np.random.Generator, out_scale: float = 1.0):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.layer_sizes = [int(s) for s in layer_sizes]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        last = len(layer_sizes) - 2
        for i, (d_in, d_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
            scale = np.sqrt(1.0 / d_in)
            if i == last:
                scale *= out_scale  # small final layer keeps initial policies near-uniform
            self.weights.append(rng.normal(0.0, scale, size=(d_out, d_in)))
            self.biases.append(np.zeros(d_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray):
        """Returns (output (B, d_out), cache of layer inputs for backward)."""
        h = np.atleast_2d(np.asarray(x, dtype=float))
        if h.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"input dim {h.shape[1]} != expected {self.layer_sizes[0]}"
            )
        cache = [h]
        for i in range(self.n_layers):
            z = h @ self.weights[i].T + self.biases[i]
            h = np.tanh(z) if i < self.n_layers - 1 else z
            cache.append(h)
        return h, cache

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray):
        """Chain-rule gradients for a summed-over-batch scalar loss.

        grad_out is dL/d(output) with shape (B, d_out).  Returns
        (grads, grad_input) where grads is a list of (dW, db) per layer.
        """
        g = np.atleast_2d(np.asarray(grad_out, dtype=float))
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * self.n_layers
        for i in reversed(range(self.n_layers)):
            h_out, h_in = cache[i + 1], cache[i]
            if i < self.n_layers - 1:
                g = g * (1.0 - h_out * h_out)  # through tanh
            grads[i] = (g.T @ h_in, g.sum(axis=0))
            g = g @ self.weights[i]
        return grads, g

    # -- parameter plumbing ---------------------------------------------------

    def param_arrays(self):
        for i in range(self.n_layers):
            yield self.weights[i]
            yield self.biases[i]

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.param_arrays()])

    def set_flat(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=float)
        pos = 0
        for p in self.param_arrays():
            p.flat[:] = vec[pos : pos + p.size]
            pos += p.size
        if pos != vec.size:
            raise ValueError(f"flat vector size {vec.size} != parameter count {pos}")

    def apply_grads(self, grads, lr: float) -> None:
        for i, (dw, db) in enumerate(grads):
            self.weights[i] -= lr * dw
            self.biases[i] -= lr * db

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mlp":
        net = cls(d["layer_sizes"], np.random.default_rng(0))
        net.weights = [np.array(w, dtype=float) for w in d["weights"]]
        net.biases = [np.array(b, dtype=float) for b in d["biases"]]
        return net


def grads_global_norm(grads) -> float:
    total = 0.0
    for dw, db in grads:
        total += float(np.sum(dw * dw)) + float(np.sum(db * db))
    return float(np.sqrt(total))


def clip_grads(grads, max_norm: float, extra: np.ndarray | None = None):
    """Scale (grads, extra) in place so their joint global norm is <= max_norm."""
    total = grads_global_norm(grads) ** 2
    if extra is not None:
        total += float(np.sum(extra * extra))
    norm = float(np.sqrt(total))
    if norm <= max_norm or norm == 0.0:
        return norm
    scale = max_norm / norm
    for dw, db in grads:
        dw *= scale
        db *= scale
    if extra is not None:
        extra *= scale
    return norm


class RunningNorm:
    """Per-dimension running mean/variance (Welford) with clipped outputs."""

    def __init__(self, dim: int, clip: float = 10.0, eps: float = 1e-8):
        self.dim = dim
        self.clip = clip
        self.eps = eps
        self.count = 0.0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def update(self, batch: np.ndarray) -> None:
        batch = np.atleast_2d(np.asarray(batch, dtype=float))
        for row in batch:
            self.count += 1.0
            delta = row - self.mean
            self.mean += delta / self.count
            self.m2 += delta * (row - self.mean)

    @property
    def std(self) -> np.ndarray:
        if self.count < 2:
            return np.ones(self.dim)
        return np.sqrt(self.m2 / (self.count - 1) + self.eps)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.count < 2:
            return np.clip(x - self.mean, -self.clip, self.clip)
        return np.clip((x - self.mean) / self.std, -self.clip, self.clip)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "clip": self.clip,
            "eps": self.eps,
            "count": self.count,
            "mean": self.mean.tolist(),
            "m2": self.m2.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunningNorm":
        norm = cls(int(d["dim"]), clip=d["clip"], eps=d["eps"])
        norm.count = float(d["count"])
        norm.mean = np.array(d["mean"], dtype=float)
        norm.m2 = np.array(d["m2"], dtype=float)
        return norm
