# cython: language_level=3
"""Compiled kernels: fused Adam batch step, MLP forward, Jacobi sweeps.

Mirrors the call surface of relufit._kernels_np.  Matrix products go
through BLAS (scipy's exported dgemm); everything else is plain C loops.
"""

import numpy as np

from libc.math cimport fabs, pow, sqrt

from scipy.linalg.cython_blas cimport dgemm

NAME = "cython"


cdef void _mm(bint ta, bint tb, double[:, ::1] a, double[:, ::1] b,
              double[:, ::1] c) noexcept nogil:
    # Row-major C = op(A) @ op(B).  Column-major BLAS computes C^T =
    # op(B)^T op(A)^T, which is the same buffer read the Fortran way, so
    # the operands swap and the trans flags carry over unchanged.
    cdef int m = c.shape[0]
    cdef int n = c.shape[1]
    cdef int k = a.shape[0] if ta else a.shape[1]
    cdef int lda = a.shape[1]
    cdef int ldb = b.shape[1]
    cdef int ldc = n
    cdef double one = 1.0
    cdef double zero = 0.0
    cdef char fa = 84 if ta else 78  # 'T' / 'N'
    cdef char fb = 84 if tb else 78
    dgemm(&fb, &fa, &n, &m, &k, &one, &b[0, 0], &ldb, &a[0, 0], &lda,
          &zero, &c[0, 0], &ldc)


cdef void _adam_flat(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
                     double lr, double beta1, double beta2,
                     double bc1, double bc2, double eps) noexcept nogil:
    cdef Py_ssize_t i
    cdef double gi
    for i in range(p.shape[0]):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
        p[i] -= lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)


cdef inline double[::1] _flat2(object arr):
    return arr.reshape(-1)


def mlp_forward(list weights, list biases, object x):
    """Predictions of a ReLU MLP; weights[l] is (fan_in, fan_out)."""
    cdef int n_layers = len(weights)
    cdef Py_ssize_t batch = x.shape[0]
    cdef Py_ssize_t i, j, n_out
    cdef double val
    cdef double[:, ::1] cur = x
    cdef double[:, ::1] w
    cdef double[:, ::1] z
    cdef double[::1] bias
    cdef int l

    for l in range(n_layers - 1):
        w = weights[l]
        bias = biases[l]
        n_out = w.shape[1]
        z_nd = np.empty((batch, n_out))
        z = z_nd
        _mm(False, False, cur, w, z)
        for i in range(batch):
            for j in range(n_out):
                val = z[i, j] + bias[j]
                z[i, j] = val if val > 0.0 else 0.0
        cur = z

    cdef double[:, ::1] head = weights[n_layers - 1]
    cdef double head_bias = biases[n_layers - 1][0]
    out_nd = np.empty(batch)
    cdef double[::1] out = out_nd
    col_nd = np.empty((batch, 1))
    cdef double[:, ::1] col = col_nd
    _mm(False, False, cur, head, col)
    for i in range(batch):
        out[i] = col[i, 0] + head_bias
    return out_nd


def adam_batch_step(list weights, list biases, list m_w, list v_w,
                    list m_b, list v_b, int t, object x, object y,
                    double lr, double beta1, double beta2, double eps):
    """Fused forward + backward + Adam update on one batch.

    t is the 1-based step count including this step (bias correction uses
    it directly).  Returns the batch mean squared error before the update.
    """
    cdef int n_layers = len(weights)
    cdef Py_ssize_t batch = x.shape[0]
    cdef double bc1 = 1.0 - pow(beta1, t)
    cdef double bc2 = 1.0 - pow(beta2, t)
    cdef Py_ssize_t i, j
    cdef int l
    cdef double val, r

    # forward, keeping every activation for the backward pass
    acts = [x]
    cdef double[:, ::1] cur = x
    cdef double[:, ::1] w
    cdef double[:, ::1] z
    cdef double[::1] bias
    cdef Py_ssize_t n_out
    for l in range(n_layers - 1):
        w = weights[l]
        bias = biases[l]
        n_out = w.shape[1]
        z_nd = np.empty((batch, n_out))
        z = z_nd
        _mm(False, False, cur, w, z)
        for i in range(batch):
            for j in range(n_out):
                val = z[i, j] + bias[j]
                z[i, j] = val if val > 0.0 else 0.0
        acts.append(z_nd)
        cur = z

    cdef double[:, ::1] head = weights[n_layers - 1]
    cdef double head_bias = biases[n_layers - 1][0]
    cdef double[::1] yv = y
    col_nd = np.empty((batch, 1))
    cdef double[:, ::1] col = col_nd
    _mm(False, False, cur, head, col)

    # loss and scaled residual; col becomes dL/dprediction
    cdef double loss = 0.0
    cdef double scale = 2.0 / batch
    for i in range(batch):
        r = col[i, 0] + head_bias - yv[i]
        loss += r * r
        col[i, 0] = scale * r
    loss /= batch

    # head gradients (computed before any update touches the head weights)
    cdef Py_ssize_t width = head.shape[0]
    gw_head_nd = np.empty((width, 1))
    cdef double[:, ::1] gw_head = gw_head_nd
    _mm(True, False, cur, col, gw_head)
    cdef double gb_head = 0.0
    for i in range(batch):
        gb_head += col[i, 0]

    # delta at the last hidden layer: relu mask times g_i * head_j
    dz_nd = np.empty((batch, width))
    cdef double[:, ::1] dz = dz_nd
    for i in range(batch):
        for j in range(width):
            dz[i, j] = col[i, 0] * head[j, 0] if cur[i, j] > 0.0 else 0.0

    _adam_flat(_flat2(weights[n_layers - 1]), _flat2(gw_head_nd),
               _flat2(m_w[n_layers - 1]), _flat2(v_w[n_layers - 1]),
               lr, beta1, beta2, bc1, bc2, eps)
    gb_head_nd = np.array([gb_head])
    _adam_flat(biases[n_layers - 1], _flat2(gb_head_nd),
               m_b[n_layers - 1], v_b[n_layers - 1],
               lr, beta1, beta2, bc1, bc2, eps)

    cdef double[:, ::1] prev
    cdef double[:, ::1] gw
    cdef double[:, ::1] da
    cdef double[::1] gb
    cdef Py_ssize_t n_in
    for l in range(n_layers - 2, -1, -1):
        prev = acts[l]
        w = weights[l]
        n_in = w.shape[0]
        n_out = w.shape[1]
        gw_nd = np.empty((n_in, n_out))
        gw = gw_nd
        _mm(True, False, prev, dz, gw)
        gb_nd = np.zeros(n_out)
        gb = gb_nd
        for i in range(batch):
            for j in range(n_out):
                gb[j] += dz[i, j]
        if l > 0:
            # propagate through this layer's original weights, then mask
            da_nd = np.empty((batch, n_in))
            da = da_nd
            _mm(False, True, dz, w, da)
            z = acts[l]
            for i in range(batch):
                for j in range(n_in):
                    da[i, j] = da[i, j] if z[i, j] > 0.0 else 0.0
            dz_nd = da_nd
            dz = da
        _adam_flat(_flat2(weights[l]), _flat2(gw_nd), _flat2(m_w[l]),
                   _flat2(v_w[l]), lr, beta1, beta2, bc1, bc2, eps)
        _adam_flat(biases[l], _flat2(gb_nd), m_b[l], v_b[l],
                   lr, beta1, beta2, bc1, bc2, eps)
    return loss


def jacobi_eigh(object gram, double rel_tol, int max_sweeps):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until every off-diagonal magnitude falls below rel_tol times
    the Frobenius norm (which rotations preserve) or max_sweeps is hit.
    Returns (eigenvalues, final max off-diagonal magnitude, sweeps used).
    """
    g_nd = np.array(gram, dtype=np.float64, copy=True)
    cdef double[:, ::1] g = g_nd
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t i, p, q
    cdef double fro = 0.0, off, apq, tau, t_rot, c, s, gp, gq, sign
    cdef int sweeps = 0

    if n == 1:
        return g_nd.diagonal().copy(), 0.0, 0

    for p in range(n):
        for q in range(n):
            fro += g[p, q] * g[p, q]
    cdef double thresh = rel_tol * sqrt(fro)

    while sweeps < max_sweeps:
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                if fabs(g[p, q]) > off:
                    off = fabs(g[p, q])
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = g[p, q]
                if apq == 0.0:
                    continue
                tau = (g[q, q] - g[p, p]) / (2.0 * apq)
                if fabs(tau) > 1e150:
                    t_rot = 1.0 / (2.0 * tau)
                else:
                    sign = 1.0 if tau >= 0.0 else -1.0
                    t_rot = sign / (fabs(tau) + sqrt(tau * tau + 1.0))
                c = 1.0 / sqrt(t_rot * t_rot + 1.0)
                s = t_rot * c
                for i in range(n):
                    gp = g[i, p]
                    gq = g[i, q]
                    g[i, p] = c * gp - s * gq
                    g[i, q] = s * gp + c * gq
                for i in range(n):
                    gp = g[p, i]
                    gq = g[q, i]
                    g[p, i] = c * gp - s * gq
                    g[q, i] = s * gp + c * gq
                g[p, q] = 0.0
                g[q, p] = 0.0
        sweeps += 1

    off = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            if fabs(g[p, q]) > off:
                off = fabs(g[p, q])
    return g_nd.diagonal().copy(), off, sweeps
