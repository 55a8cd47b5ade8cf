"""Built-in correctness checks, runnable without pytest.

Each check prints one line.  Returns True only if every check passed.
"""

from __future__ import annotations

import math

import numpy as np

from . import backend
from .linalg import singular_values
from .optim import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from .rng import RandomSource, derive_seed
from .student import forward, init_student
from .teacher import TeacherConfig, generate_dataset, output_variance, sample_teacher, teacher_forward
from .conditioning import compute_log_lambda, sample_weight_matrix

_RESULTS = []


def check(label: str, cond: bool) -> None:
    mark = "ok " if cond else "FAIL"
    print(f"[{mark}] {label}")
    _RESULTS.append(cond)


def _check_rng() -> None:
    a = RandomSource(7).standard_normal(16)
    b = RandomSource(7).standard_normal(16)
    check("same seed reproduces the same stream", bool(np.array_equal(a, b)))
    c = RandomSource(8).standard_normal(16)
    check("different seed gives a different stream", not np.array_equal(a, c))
    check("child derivation is order independent",
          derive_seed(3, "x", 1) == derive_seed(3, "x", 1)
          and derive_seed(3, "x", 1) != derive_seed(3, "x", 2))


def _check_teacher(quick: bool) -> None:
    rng = RandomSource(11)
    config = TeacherConfig(3, 5, 0.1)
    teacher = sample_teacher(config, rng.child(0))
    x = rng.child(1).standard_normal(3)
    by_hand = 0.0
    for i in range(config.M):
        by_hand += teacher.theta[i] * max(0.0, float(teacher.a[i] @ x) + teacher.b[i])
    check("teacher forward matches a by-hand sum",
          abs(by_hand - teacher_forward(teacher, x)) < 1e-12)
    draws = 2000 if quick else 20000
    var = output_variance(config, draws, rng.child(2))
    check("teacher output variance is near 1/2",
          abs(var - 0.5) < 0.1)
    data = generate_dataset(teacher, 32, rng.child(3))
    noise = data.ys - data.ys_noiseless
    check("dataset noise has the requested scale",
          float(np.std(noise)) < 5 * config.sigma and data.n == 32)


def _check_student() -> None:
    rng = RandomSource(21)
    net = init_student(4, 2, 6, rng.child(0))
    xs = rng.child(1).normal_matrix(8, 4)
    preds, _ = forward(net, xs)
    check("student forward returns one prediction per row", preds.shape == (8,))
    zero = forward(net, np.zeros((2, 4)))[0]
    check("zero biases mean zero input maps to zero", bool(np.all(zero == 0.0)))


def _check_kernels() -> None:
    rng = RandomSource(31)
    net = init_student(3, 2, 5, rng.child(0))
    xs = rng.child(1).normal_matrix(16, 3)
    ref, _ = forward(net, xs)
    got = backend.kernels.mlp_forward(net.weights, net.biases, xs)
    check(f"{backend.BACKEND} forward kernel matches the reference",
          float(np.max(np.abs(ref - got))) < 1e-12)
    ys = rng.child(2).standard_normal(16)
    weights = [w.copy() for w in net.weights]
    biases = [b.copy() for b in net.biases]
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    loss = backend.kernels.adam_batch_step(
        weights, biases, m_w, v_w, m_b, v_b, 1, xs, ys,
        1e-3, ADAM_BETA1, ADAM_BETA2, ADAM_EPS)
    check("one optimizer step returns the pre-step loss",
          abs(loss - float(np.mean((ref - ys) ** 2))) < 1e-12)
    moved = any(not np.array_equal(w0, w1) for w0, w1 in zip(net.weights, weights))
    check("one optimizer step moves the parameters", moved)


def _check_linalg(quick: bool) -> None:
    rng = RandomSource(41)
    trials = 3 if quick else 10
    worst = 0.0
    for t in range(trials):
        w = rng.child(t).normal_matrix(6, 4)
        sv = singular_values(w)
        ref = np.linalg.svd(w, compute_uv=False)
        worst = max(worst, float(np.max(np.abs(sv - ref))))
    check("singular values agree with a dense SVD", worst < 1e-9)
    w = sample_weight_matrix(8, 4, RandomSource(43))
    check("spectral spread statistic is nonnegative", compute_log_lambda(w) >= 0.0)


def run_selftest(quick: bool = False) -> bool:
    _RESULTS.clear()
    print(f"backend: {backend.BACKEND}")
    _check_rng()
    _check_teacher(quick)
    _check_student()
    _check_kernels()
    _check_linalg(quick)
    passed = sum(_RESULTS)
    print(f"{passed}/{len(_RESULTS)} checks passed")
    return all(_RESULTS)
