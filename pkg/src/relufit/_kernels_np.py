"""Pure numpy kernels: the fallback when the compiled module is absent.

Mirrors the call surface of relufit._kernels exactly.  Self-contained on
purpose (numpy only); cross-backend agreement is pinned by tests.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def mlp_forward(weights: list, biases: list, x: np.ndarray) -> np.ndarray:
    """Predictions of a ReLU MLP; weights[l] is (fan_in, fan_out)."""
    a = x
    for w, b in zip(weights[:-1], biases[:-1]):
        a = np.maximum(a @ w + b, 0.0)
    return (a @ weights[-1])[:, 0] + biases[-1][0]


def _adam_update(p, g, m, v, lr, beta1, beta2, bc1, bc2, eps):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def adam_batch_step(weights: list, biases: list, m_w: list, v_w: list,
                    m_b: list, v_b: list, t: int, x: np.ndarray, y: np.ndarray,
                    lr: float, beta1: float, beta2: float, eps: float) -> float:
    """Fused forward + backward + Adam update on one batch.

    t is the 1-based step count including this step (bias correction uses
    it directly).  Returns the batch mean squared error before the update.
    """
    n_layers = len(weights)
    batch = x.shape[0]

    acts = [x]
    a = x
    for l in range(n_layers - 1):
        a = np.maximum(a @ weights[l] + biases[l], 0.0)
        acts.append(a)
    pred = (a @ weights[-1])[:, 0] + biases[-1][0]

    residual = pred - y
    loss = float(residual @ residual) / batch
    g = (2.0 / batch) * residual

    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t

    gw_head = acts[-1].T @ g[:, None]
    gb_head = np.array([g.sum()])
    da = np.outer(g, weights[-1][:, 0])
    _adam_update(weights[-1], gw_head, m_w[-1], v_w[-1], lr, beta1, beta2, bc1, bc2, eps)
    _adam_update(biases[-1], gb_head, m_b[-1], v_b[-1], lr, beta1, beta2, bc1, bc2, eps)

    for l in range(n_layers - 2, -1, -1):
        dz = da * (acts[l + 1] > 0.0)
        gw = acts[l].T @ dz
        gb = dz.sum(axis=0)
        if l > 0:
            da = dz @ weights[l].T
        _adam_update(weights[l], gw, m_w[l], v_w[l], lr, beta1, beta2, bc1, bc2, eps)
        _adam_update(biases[l], gb, m_b[l], v_b[l], lr, beta1, beta2, bc1, bc2, eps)
    return loss


def jacobi_eigh(gram: np.ndarray, rel_tol: float, max_sweeps: int):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until every off-diagonal magnitude falls below rel_tol times
    the Frobenius norm (which rotations preserve) or max_sweeps is hit.
    Returns (eigenvalues, final max off-diagonal magnitude, sweeps used).
    """
    g = np.array(gram, dtype=np.float64, copy=True)
    n = g.shape[0]
    if n == 1:
        return g.diagonal().copy(), 0.0, 0

    thresh = rel_tol * float(np.sqrt((g * g).sum()))

    def max_off(mat):
        off = np.abs(mat - np.diag(mat.diagonal()))
        return float(off.max())

    sweeps = 0
    while sweeps < max_sweeps and max_off(g) > thresh:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = g[p, q]
                if apq == 0.0:
                    continue
                tau = (g[q, q] - g[p, p]) / (2.0 * apq)
                if abs(tau) > 1e150:
                    t_rot = 1.0 / (2.0 * tau)
                else:
                    sign = 1.0 if tau >= 0.0 else -1.0
                    t_rot = sign / (abs(tau) + np.sqrt(tau * tau + 1.0))
                c = 1.0 / np.sqrt(t_rot * t_rot + 1.0)
                s = t_rot * c
                gp = g[:, p].copy()
                gq = g[:, q].copy()
                g[:, p] = c * gp - s * gq
                g[:, q] = s * gp + c * gq
                rp = g[p, :].copy()
                rq = g[q, :].copy()
                g[p, :] = c * rp - s * rq
                g[q, :] = s * rp + c * rq
                g[p, q] = 0.0
                g[q, p] = 0.0
        sweeps += 1
    return g.diagonal().copy(), max_off(g), sweeps
