"""Portable seeded random numbers.

All randomness in the package flows through :class:`SplitMix64`, a 64-bit
generator that is trivial to reproduce in any language. Independent streams
are derived from a run seed and a label with :func:`derive_seed`::

    stream_seed = SplitMix64(seed ^ fnv1a64(label)).next_u64()

Bounded draws use rejection sampling so every integer in ``[0, n)`` is
exactly equally likely. The compiled kernels implement the same arithmetic,
which is what makes traces bit-identical across backends.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    h = FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def bounded(self, n: int) -> int:
        """Uniform integer in ``[0, n)``; ``n`` must be positive."""
        if n <= 0:
            raise ValueError(f"bounded() needs n > 0, got {n}")
        threshold = ((1 << 64) - n) % n
        while True:
            x = self.next_u64()
            if x >= threshold:
                return x % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, front to back."""
        n = len(items)
        for i in range(n - 1):
            j = i + self.bounded(n - i)
            items[i], items[j] = items[j], items[i]


def derive_seed(seed: int, label: str) -> int:
    return SplitMix64((seed & MASK64) ^ fnv1a64(label)).next_u64()


def stream(seed: int, label: str) -> SplitMix64:
    return SplitMix64(derive_seed(seed, label))
