"""Portable deterministic randomness.

Seed selection, demo shuffling, and training-set shuffling must be
reproducible across runs, platforms, and language runtimes, so we avoid the
platform RNG and use SplitMix64 (Steele et al.), a tiny counter-based
generator with a well-known reference implementation. Strings are folded
into seeds with 64-bit FNV-1a.
"""

from __future__ import annotations

from typing import List, Sequence, TypeVar

_MASK64 = (1 << 64) - 1

T = TypeVar("T")


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 encoding of `text`."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


class SplitMix64:
    """SplitMix64 pseudo-random generator over a 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError("randrange() bound must be positive")
        limit = _MASK64 - (_MASK64 + 1) % n
        while True:
            value = self.next_u64()
            if value <= limit:
                return value % n

    def shuffle(self, items: List[T]) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> List[int]:
        """k distinct indices drawn without replacement from range(n).

        Returned in ascending order so that selections preserve the pool's
        original ordering.
        """
        if k > n:
            raise ValueError(f"cannot sample {k} from {n}")
        pool = list(range(n))
        picked = []
        for _ in range(k):
            picked.append(pool.pop(self.randrange(len(pool))))
        return sorted(picked)


def shuffled(items: Sequence[T], seed: int) -> List[T]:
    """Copy of `items` shuffled by a fresh SplitMix64 stream."""
    out = list(items)
    SplitMix64(seed).shuffle(out)
    return out
