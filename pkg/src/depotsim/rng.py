"""Counter-based deterministic random streams.

Each consumer (channel, pedestrians, ...) owns a named stream keyed by the
scenario seed. A draw hashes (seed, stream, counter), so stream state is a
single integer and snapshots/restores are exact and platform independent.
"""

from __future__ import annotations

import hashlib
import struct


class DetRng:
    __slots__ = ("seed", "stream", "counter")

    def __init__(self, seed: int, stream: str, counter: int = 0):
        self.seed = seed
        self.stream = stream
        self.counter = counter

    def _next_u64(self) -> int:
        h = hashlib.blake2b(
            struct.pack("<qQ", self.seed, self.counter) + self.stream.encode("utf-8"),
            digest_size=8,
        ).digest()
        self.counter += 1
        return struct.unpack("<Q", h)[0]

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return self._next_u64() / 2.0**64

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        if hi < lo:
            raise ValueError("empty range")
        span = hi - lo + 1
        return lo + self._next_u64() % span

    def state(self) -> int:
        return self.counter

    def restore(self, counter: int) -> None:
        self.counter = counter
