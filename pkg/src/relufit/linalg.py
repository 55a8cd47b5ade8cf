"""Dense matrix helpers: validated matmul and Jacobi singular values.

Matrices are plain C-order float64 numpy arrays throughout the package.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .errors import ConvergenceError, ShapeError

JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SV_FLOOR = 1e-300


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"expected a 2-D matrix with positive dims, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with explicit shape validation."""
    am = as_matrix(a)
    bm = as_matrix(b)
    if am.shape[1] != bm.shape[0]:
        raise ShapeError(f"cannot multiply {am.shape} by {bm.shape}")
    return am @ bm


def singular_values(w, max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """Singular values of w, descending, floored at 1e-300.

    Runs cyclic Jacobi on the smaller Gram matrix (w^T w or w w^T) until
    every off-diagonal entry is below 1e-12 times its Frobenius norm.
    Raises ConvergenceError, carrying the residual, if max_sweeps pass
    without reaching that.  The floor keeps downstream log-domain math
    finite for numerically zero directions.
    """
    wm = as_matrix(w)
    rows, cols = wm.shape
    gram = wm.T @ wm if cols <= rows else wm @ wm.T
    eigs, residual, _ = backend.kernels.jacobi_eigh(gram, JACOBI_REL_TOL, max_sweeps)
    thresh = JACOBI_REL_TOL * float(np.sqrt((gram * gram).sum()))
    if residual > thresh:
        raise ConvergenceError(
            f"Jacobi did not converge in {max_sweeps} sweeps", residual
        )
    vals = np.sqrt(np.maximum(eigs, 0.0))
    vals.sort()
    return np.maximum(vals[::-1], SV_FLOOR)
