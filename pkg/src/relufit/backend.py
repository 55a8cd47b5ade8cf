"""Kernel backend selection, fixed at import time.

The compiled extension (relufit._kernels) is preferred when importable;
otherwise the numpy twin takes over transparently.  Set RELUFIT_BACKEND
to "numpy" or "cython" to force one side; forcing "cython" on a build
without the extension raises immediately rather than silently degrading.
"""

from __future__ import annotations

import os

from . import _kernels_np

_ENV_VAR = "RELUFIT_BACKEND"


def _select():
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if choice in ("numpy", "python"):
        return _kernels_np
    if choice in ("cython", "compiled"):
        from . import _kernels
        return _kernels
    if choice != "auto":
        raise ValueError(f"{_ENV_VAR} must be auto, numpy, or cython, got {choice!r}")
    try:
        from . import _kernels
        return _kernels
    except ImportError:
        return _kernels_np


kernels = _select()
BACKEND = kernels.NAME


def available_backends() -> list:
    names = ["numpy"]
    try:
        from . import _kernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    return names


def get_kernels(name: str):
    """Fetch a specific kernel module by name (for tests and benchmarks)."""
    if name == "numpy":
        return _kernels_np
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
