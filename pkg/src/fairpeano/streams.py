"""Seeded random streams.

Every stochastic routine takes a ``numpy.random.Generator`` explicitly. Child
streams are derived from ``(seed, key...)`` through ``SeedSequence`` spawn
keys, so a task's stream depends only on its own key and never on how many
tasks ran before it.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit integer seed for the child stream ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


class UniformBuffer:
    """Draws uniforms from ``rng`` in blocks; scalar calls are the hot path of the walkers."""

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self._buf = rng.random(block)
        self._pos = 0

    def __call__(self) -> float:
        if self._pos == self.block:
            self._buf = self.rng.random(self.block)
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return float(x)
