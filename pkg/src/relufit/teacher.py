"""Ground-truth networks and the datasets they label.

A teacher is a single-hidden-layer ReLU net with Gaussian parameters,
scaled so that Var[g(X)] is 1/2 for standard normal inputs at every
(d, M).  Batched evaluation goes through the same forward kernel the
students use, so a student whose parameters copy a teacher produces
bitwise identical predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .rng import RandomSource


@dataclass(frozen=True)
class TeacherConfig:
    """Problem instance: input dim d, teacher width M, label noise sigma."""

    d: int
    M: int
    sigma: float

    def __post_init__(self):
        if self.d < 1 or self.M < 1:
            raise ValueError(f"d and M must be >= 1, got d={self.d} M={self.M}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass
class TeacherNet:
    """g(x) = sum_i theta_i relu(a_i . x + b_i)."""

    config: TeacherConfig
    a: np.ndarray      # (M, d)
    b: np.ndarray      # (M,)
    theta: np.ndarray  # (M,)


@dataclass
class Dataset:
    """Inputs with noisy labels; the clean labels ride along for analysis."""

    xs: np.ndarray            # (N, d)
    ys: np.ndarray            # (N,)
    ys_noiseless: np.ndarray  # (N,)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]


def sample_teacher(config: TeacherConfig, rng: RandomSource) -> TeacherNet:
    """Draw a teacher; a row-major, then b, then theta, so seeds pin it."""
    scale = 1.0 / math.sqrt(config.d + 1)
    a = rng.normal_matrix(config.M, config.d) * scale
    b = rng.standard_normal(config.M) * scale
    theta = rng.standard_normal(config.M) / math.sqrt(config.M)
    return TeacherNet(config, a, b, theta)


def teacher_forward(teacher: TeacherNet, x: np.ndarray) -> float:
    """Evaluate g at a single input (reference path, plain numpy)."""
    z = teacher.a @ x + teacher.b
    return float(teacher.theta @ np.maximum(z, 0.0))


def _as_student_params(teacher: TeacherNet):
    w1 = np.ascontiguousarray(teacher.a.T)
    w2 = np.ascontiguousarray(teacher.theta.reshape(-1, 1))
    return [w1, w2], [teacher.b, np.zeros(1)]


def teacher_predict(teacher: TeacherNet, xs: np.ndarray) -> np.ndarray:
    """Evaluate g on a batch through the shared forward kernel."""
    weights, biases = _as_student_params(teacher)
    return backend.kernels.mlp_forward(weights, biases, np.ascontiguousarray(xs))


def generate_dataset(teacher: TeacherNet, n: int, rng: RandomSource) -> Dataset:
    """n rows of x ~ N(0, I_d) with y = g(x) + sigma * noise.

    Consumption order is the xs block (row-major) then the noise block,
    so a fixed rng reproduces the dataset exactly.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    cfg = teacher.config
    xs = rng.normal_matrix(n, cfg.d)
    clean = teacher_predict(teacher, xs)
    ys = clean + cfg.sigma * rng.standard_normal(n)
    return Dataset(xs, ys, clean)


def dataset_to_csv(ds: Dataset, path: str) -> None:
    cols = [f"x_{i + 1}" for i in range(ds.d)] + ["y", "y_noiseless"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.xs[i]]
            row += [repr(float(ds.ys[i])), repr(float(ds.ys_noiseless[i]))]
            fh.write(",".join(row) + "\n")


def output_variance(config: TeacherConfig, draws: int, rng: RandomSource,
                    chunk: int = 512) -> float:
    """Monte Carlo Var[g(X)] over fresh (teacher, input) pairs.

    Each draw is an independent teacher evaluated at one independent
    input; chunked so large (d, M) stay within memory.
    """
    scale = 1.0 / math.sqrt(config.d + 1)
    values = []
    remaining = draws
    while remaining > 0:
        c = min(chunk, remaining)
        a = rng.standard_normal(c * config.M * config.d).reshape(c, config.M, config.d) * scale
        b = rng.standard_normal(c * config.M).reshape(c, config.M) * scale
        theta = rng.standard_normal(c * config.M).reshape(c, config.M) / math.sqrt(config.M)
        x = rng.normal_matrix(c, config.d)
        z = np.einsum("cmd,cd->cm", a, x) + b
        values.append((theta * np.maximum(z, 0.0)).sum(axis=1))
        remaining -= c
    g = np.concatenate(values)
    return float(np.var(g))
