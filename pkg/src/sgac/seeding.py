"""Portable pseudo-randomness for the curriculum.

Everything that has to be reproducible across implementations goes through
SplitMix64 (pool shuffle, sieve draws) or ``derive_seed`` (per-rollout seeds).
Python's ``random`` is only used inside the simulated learner, seeded from
``derive_seed`` output.
"""

from __future__ import annotations

import hashlib
import struct
from typing import MutableSequence, TypeVar

MASK64 = (1 << 64) - 1

T = TypeVar("T")


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood 2014 constants)."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: MutableSequence[T]) -> None:
        """In-place Fisher-Yates, walking from the last index down."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def _encode(part: int | str) -> bytes:
    if isinstance(part, bool):
        part = int(part)
    if isinstance(part, int):
        return b"i" + struct.pack("<Q", part & MASK64)
    raw = part.encode("utf-8")
    return b"s" + struct.pack("<I", len(raw)) + raw


def derive_seed(master: int, *parts: int | str) -> int:
    """Stable 64-bit seed from a master seed and a path of components.

    BLAKE2b over a length-prefixed encoding, so ``(1, 23)`` and ``(12, 3)``
    never collide and any changed component changes the stream.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(_encode(master))
    for part in parts:
        h.update(_encode(part))
    return int.from_bytes(h.digest(), "little")


def rollout_seed(seed: int, rollout_index: int) -> int:
    return derive_seed(seed, "rollout", rollout_index)
