"""Deterministic, splittable randomness.

Every stochastic step in the harness draws from a RandomSource, a thin
wrapper over a counter-based PRNG (Philox) keyed by a 64-bit seed.  Child
sources are derived by hashing (parent seed, index) with SHA-256, so a
child stream depends only on those two values, never on how much the
parent has already consumed.  That property is what makes sweep results
reproducible regardless of trial scheduling or process layout.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _mix(tag: bytes, *parts: int) -> int:
    h = hashlib.sha256(tag + b":" + b":".join(str(p).encode() for p in parts))
    return int.from_bytes(h.digest()[:8], "little")


def derive_seed(master_seed: int, *parts) -> int:
    """Content-addressed 64-bit seed from a master seed and key parts.

    Floats are keyed by repr so that e.g. 0.1 hashes identically on every
    platform that round-trips doubles.
    """
    text = ":".join(repr(p) for p in parts)
    h = hashlib.sha256(f"relufit:{master_seed & _MASK64}:{text}".encode())
    return int.from_bytes(h.digest()[:8], "little")


class RandomSource:
    """A seeded stream of random draws with deterministic splitting."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def child(self, index: int) -> "RandomSource":
        """Derive an independent stream from (self.seed, index).

        Does not consume from or otherwise disturb this stream.
        """
        if index < 0:
            raise ValueError("child index must be nonnegative")
        return RandomSource(_mix(b"relufit.child", self.seed, index))

    def standard_normal(self, n: int) -> np.ndarray:
        """n i.i.d. draws from N(0, 1) as a 1-D float64 array."""
        return self._gen.standard_normal(n)

    def normal_matrix(self, rows: int, cols: int) -> np.ndarray:
        """rows x cols standard normals, filled row-major."""
        return self._gen.standard_normal((rows, cols))

    def permutation(self, n: int) -> np.ndarray:
        """A uniformly random permutation of range(n)."""
        return self._gen.permutation(n)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed})"
