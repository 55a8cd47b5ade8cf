import numpy as np
import pytest

from relufit.errors import ShapeError
from relufit.rng import RandomSource
from relufit.student import (
    StudentNet,
    backward,
    forward,
    from_flat,
    init_student,
    layer_dims,
    to_flat,
)

FD_H = 1e-5


def numeric_gradient(net, xs, ys):
    """Central-difference loss gradient in the flat parameter layout."""
    flat = to_flat(net)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + FD_H
        hi = loss_of(from_flat(net.d, net.depth, net.width, bumped), xs, ys)
        bumped[i] = flat[i] - FD_H
        lo = loss_of(from_flat(net.d, net.depth, net.width, bumped), xs, ys)
        grad[i] = (hi - lo) / (2.0 * FD_H)
    return grad


def loss_of(net, xs, ys):
    preds, _ = forward(net, xs)
    return float(np.mean((preds - ys) ** 2))


def grads_to_flat(net, gset):
    parts = []
    for gw, gb in zip(gset.weights, gset.biases):
        parts.append(gw.reshape(-1))
        parts.append(gb)
    return np.concatenate(parts)


def assert_grad_close(analytic, numeric):
    diff = np.abs(analytic - numeric)
    tol = np.maximum(1e-7, 1e-4 * np.abs(numeric))
    assert np.all(diff <= tol), f"max diff {diff.max()} at {int(diff.argmax())}"


def test_layer_dims():
    assert layer_dims(3, 1, 5) == [3, 5, 1]
    assert layer_dims(3, 2, 5) == [3, 5, 5, 1]
    assert layer_dims(2, 3, 4) == [2, 4, 4, 4, 1]


def test_init_shapes_and_scale():
    rng = RandomSource(1)
    net = init_student(6, 2, 40, rng)
    assert [w.shape for w in net.weights] == [(6, 40), (40, 40), (40, 1)]
    assert [b.shape for b in net.biases] == [(40,), (40,), (1,)]
    assert all(np.all(b == 0.0) for b in net.biases)
    # weight variance tracks 1/fan_in
    assert abs(float(np.var(net.weights[0])) - 1.0 / 6) < 0.1
    assert abs(float(np.var(net.weights[1])) - 1.0 / 40) < 0.01


def test_init_rejects_bad_depth():
    with pytest.raises(ValueError):
        init_student(3, 0, 4, RandomSource(0))
    with pytest.raises(ValueError):
        init_student(3, 4, 4, RandomSource(0))


def test_forward_single_relu_by_hand():
    net = StudentNet(
        d=1, depth=1, width=1,
        weights=[np.array([[2.0]]), np.array([[3.0]])],
        biases=[np.array([-1.0]), np.array([0.5])],
    )
    xs = np.array([[1.0], [0.0], [-1.0]])
    preds, cache = forward(net, xs)
    # relu(2x-1)*3 + 0.5
    assert np.allclose(preds, [3.5, 0.5, 0.5], atol=1e-15)
    assert np.allclose(cache.activations[0].reshape(-1), [1.0, 0.0, 0.0])


def test_forward_rejects_wrong_width():
    net = init_student(3, 1, 4, RandomSource(2))
    with pytest.raises(ShapeError):
        forward(net, np.zeros((5, 2)))


def test_gradients_match_finite_differences():
    # random biases keep pre-activations off the ReLU kink, where central
    # differences cannot agree with any subgradient convention
    rng = RandomSource(3)
    case = 0
    for depth in (1, 2, 3):
        for trial in range(4):
            sub = rng.child(case)
            case += 1
            d = 1 + int(sub.child(0).standard_normal(1)[0] ** 2 * 3) % 6
            width = 2 + trial
            batch = 1 + (case % 5)
            net = init_student(d, depth, width, sub.child(1))
            bias_rng = sub.child(4)
            for b in net.biases:
                b[:] = 0.3 * bias_rng.standard_normal(b.size)
            xs = sub.child(2).normal_matrix(batch, d)
            ys = sub.child(3).standard_normal(batch)
            preds, cache = forward(net, xs)
            loss, gset = backward(net, cache, preds, ys)
            assert abs(loss - loss_of(net, xs, ys)) < 1e-12
            assert_grad_close(grads_to_flat(net, gset), numeric_gradient(net, xs, ys))


def test_gradient_zero_at_perfect_fit():
    net = init_student(2, 1, 3, RandomSource(4))
    xs = RandomSource(5).normal_matrix(6, 2)
    preds, cache = forward(net, xs)
    loss, gset = backward(net, cache, preds, preds.copy())
    assert loss == 0.0
    for gw in gset.weights:
        assert np.all(gw == 0.0)


def test_flat_round_trip():
    net = init_student(4, 2, 5, RandomSource(6))
    flat = to_flat(net)
    rebuilt = from_flat(net.d, net.depth, net.width, flat)
    for w0, w1 in zip(net.weights, rebuilt.weights):
        assert np.array_equal(w0, w1)
    for b0, b1 in zip(net.biases, rebuilt.biases):
        assert np.array_equal(b0, b1)
    assert flat.size == sum(w.size for w in net.weights) + sum(b.size for b in net.biases)


def test_save_load_round_trip(tmp_path):
    from relufit.student import load_params, save_params

    net = init_student(3, 2, 4, RandomSource(7))
    path = tmp_path / "params.json"
    save_params(net, path)
    again = load_params(path)
    assert again.d == net.d and again.depth == net.depth and again.width == net.width
    for w0, w1 in zip(net.weights, again.weights):
        assert np.array_equal(w0, w1)
    for b0, b1 in zip(net.biases, again.biases):
        assert np.array_equal(b0, b1)
