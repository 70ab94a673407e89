"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, stream_id)``, so streams
with different ids are independent and any stream can be recreated exactly
from its two integers.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``."""

    def __init__(self, seed: int = 0, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)
        self.generator = np.random.Generator(self._bitgen)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    @property
    def counter(self) -> np.ndarray:
        return self._bitgen.state["state"]["counter"].copy()

    def spawn(self, stream_id: int) -> "RngStream":
        """A fresh stream sharing this seed but with another id."""
        return RngStream(self.seed, stream_id)

    def normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)


def as_stream(rng: RngStream | int | None) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    return RngStream(0 if rng is None else rng)
