"""Trainable ReLU networks and their analytic gradients.

A student is a fully connected ReLU net with 1 to 3 equal-width hidden
layers and a scalar linear head.  forward/backward here are the plain
numpy reference path, kept deliberately simple: they are the oracle the
finite-difference tests and the compiled kernels are checked against.
The hot training loop lives in the backend kernels, not here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .rng import RandomSource

MAX_DEPTH = 3


@dataclass
class StudentNet:
    """Parameters of one student network.

    weights[l] has shape (fan_in, fan_out); the head is (width, 1).
    biases[l] has shape (fan_out,); every layer, head included, has one.
    """

    d: int
    depth: int
    width: int
    weights: list
    biases: list

    def copy(self) -> "StudentNet":
        return StudentNet(
            self.d,
            self.depth,
            self.width,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def param_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


@dataclass
class ForwardCache:
    """Per-layer tensors retained for backprop."""

    x: np.ndarray
    pre_activations: list
    activations: list


@dataclass
class GradientSet:
    """Gradients matching StudentNet.weights / .biases shapes."""

    weights: list
    biases: list


def layer_dims(d: int, depth: int, width: int) -> list:
    """Unit counts per layer boundary: input, hidden(s), output."""
    return [d] + [width] * depth + [1]


def init_student(d: int, depth: int, width: int, rng: RandomSource) -> StudentNet:
    """Fresh student with N(0, 1/fan_in) weights and zero biases.

    Weight matrices are drawn layer by layer, each filled row-major, so a
    given rng seed pins every parameter.
    """
    if not 1 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must be in [1, {MAX_DEPTH}], got {depth}")
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    dims = layer_dims(d, depth, width)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal_matrix(fan_in, fan_out) / math.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return StudentNet(d, depth, width, weights, biases)


def forward(net: StudentNet, x: np.ndarray):
    """Batched forward pass.

    x is (B, d); returns (predictions of shape (B,), ForwardCache).
    """
    if x.ndim != 2 or x.shape[1] != net.d:
        raise ShapeError(f"expected input of shape (B, {net.d}), got {x.shape}")
    pre = []
    act = []
    a = x
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = a @ w + b
        a = np.maximum(z, 0.0)
        pre.append(z)
        act.append(a)
    out = (a @ net.weights[-1])[:, 0] + net.biases[-1][0]
    return out, ForwardCache(x, pre, act)


def backward(net: StudentNet, cache: ForwardCache, predictions: np.ndarray, targets: np.ndarray):
    """Mean squared error and its exact gradients.

    Loss is mean over the batch of (prediction - target)^2.  The ReLU
    subgradient at exactly 0 is taken as 0, so a unit whose pre-activation
    is 0 passes nothing back.
    """
    batch = predictions.shape[0]
    residual = predictions - targets
    loss = float(residual @ residual) / batch
    g = (2.0 / batch) * residual

    gw = [None] * len(net.weights)
    gb = [None] * len(net.biases)

    last = cache.activations[-1] if cache.activations else cache.x
    gw[-1] = last.T @ g[:, None]
    gb[-1] = np.array([g.sum()])

    da = np.outer(g, net.weights[-1][:, 0])
    for l in range(net.depth - 1, -1, -1):
        dz = da * (cache.pre_activations[l] > 0.0)
        prev = cache.activations[l - 1] if l > 0 else cache.x
        gw[l] = prev.T @ dz
        gb[l] = dz.sum(axis=0)
        if l > 0:
            da = dz @ net.weights[l].T
    return loss, GradientSet(gw, gb)


# --- parameter snapshots -------------------------------------------------


def to_flat(net: StudentNet) -> np.ndarray:
    """All parameters as one vector: per layer, weights row-major then bias."""
    parts = []
    for w, b in zip(net.weights, net.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def from_flat(d: int, depth: int, width: int, flat: np.ndarray) -> StudentNet:
    dims = layer_dims(d, depth, width)
    weights = []
    biases = []
    pos = 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(np.array(flat[pos:pos + fan_in * fan_out]).reshape(fan_in, fan_out))
        pos += fan_in * fan_out
        biases.append(np.array(flat[pos:pos + fan_out]))
        pos += fan_out
    if pos != len(flat):
        raise ValueError(f"expected {pos} parameters, got {len(flat)}")
    return StudentNet(d, depth, width, weights, biases)


def save_params(net: StudentNet, path: str) -> None:
    """JSON snapshot; float64 values round-trip exactly through repr."""
    payload = {
        "d": net.d,
        "depth": net.depth,
        "width": net.width,
        "params": to_flat(net).tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_params(path: str) -> StudentNet:
    with open(path) as fh:
        payload = json.load(fh)
    flat = np.asarray(payload["params"], dtype=np.float64)
    return from_flat(payload["d"], payload["depth"], payload["width"], flat)
