"""Portable seeded randomness for the choice-metric fallback.

xoshiro256** seeded through splitmix64: the same seed yields the same
sequence on every platform, which keeps benchmark reports byte-identical.
Streams are derived per problem id so report rows do not depend on batch
order or concurrency.
"""

from __future__ import annotations

import hashlib

_MASK = (1 << 64) - 1


def splitmix64(state: int):
    """Yields the splitmix64 sequence from `state`."""
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        yield (z ^ (z >> 31)) & _MASK


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    def __init__(self, seed: int):
        gen = splitmix64(seed & _MASK)
        self.s = [next(gen) for _ in range(4)]
        if not any(self.s):
            self.s[0] = 1  # the all-zero state is invalid

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n


def derive_stream(seed: int, label: str) -> Xoshiro256StarStar:
    """Independent generator for (seed, label); label is hashed so streams
    do not collide across problem ids."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    mixed = (seed & _MASK) ^ int.from_bytes(digest[:8], "big")
    return Xoshiro256StarStar(mixed)
