"""
Seeded random streams.

A stream is a Philox (counter-based) bit generator keyed by the master seed and a
stable hash of the run id, so the same (master_seed, run_id) always reproduces the
same draws and distinct run ids give independent streams.
"""

import hashlib
from typing import Optional, Tuple

import numpy as np

from .errors import ArgumentError


def _run_key(run_id: str) -> Tuple[int, int]:
    digest = hashlib.blake2b(run_id.encode('utf-8'), digest_size=16).digest()
    return int.from_bytes(digest[:8], 'little'), int.from_bytes(digest[8:], 'little')


class RandomStream:
    """Uniforms, coins, normals and without-replacement batches from one Philox stream"""

    def __init__(self, master_seed: int, run_id: str):
        self.master_seed = int(master_seed)
        self.run_id = run_id
        seq = np.random.SeedSequence(entropy=self.master_seed & 0xFFFFFFFFFFFFFFFF, spawn_key=_run_key(run_id))
        self.generator = np.random.Generator(np.random.Philox(seq))
        # persistent permutation buffer for partial Fisher-Yates
        self._perm: Optional[np.ndarray] = None

    def uniform(self, size: Optional[int] = None):
        return self.generator.random(size)

    def bernoulli(self, p: float) -> bool:
        """One coin with P(heads) = p; p = 1 always heads, p = 0 always tails"""
        if not 0.0 <= p <= 1.0:
            raise ArgumentError(f"Bernoulli probability must lie in [0, 1], got {p}")
        return bool(self.uniform() < p)

    def normal(self, size=None, scale: float = 1.0):
        return self.generator.normal(0.0, scale, size)

    def integers(self, low: int, high: int, size=None):
        return self.generator.integers(low, high, size)

    def sample_batch(self, n: int, b: int) -> np.ndarray:
        """b distinct indices of range(n), uniformly at random (partial Fisher-Yates)"""
        if b <= 0 or b > n:
            raise ArgumentError(f"batch size must satisfy 0 < b <= n, got b={b}, n={n}")
        if self._perm is None or self._perm.size != n:
            self._perm = np.arange(n)
        perm = self._perm
        offsets = self.generator.integers(0, n - np.arange(b))
        for k in range(b):
            j = k + int(offsets[k])
            perm[k], perm[j] = perm[j], perm[k]
        return perm[:b].copy()

    def spawn(self, suffix: str) -> 'RandomStream':
        return RandomStream(self.master_seed, f"{self.run_id}/{suffix}")


def rng_stream(master_seed: int, run_id: str) -> RandomStream:
    return RandomStream(master_seed, run_id)
