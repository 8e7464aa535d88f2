"""Portable pseudorandom numbers: xoshiro256** seeded through SplitMix64.

Everything here is defined on 64-bit integers so streams can be reproduced
in any language. Derived quantities:

* uniform: ``(next >> 11) * 2**-53`` in [0, 1)
* integers(lo, hi): ``next % n`` with rejection of the biased tail
* normal: Box-Muller cosine branch, one uniform pair per variate
* poisson: sequential inversion, means above 500 split into equal chunks
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GENERATOR_NAME = "xoshiro256** (SplitMix64 seeding, FNV-1a key hashing)"


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step: returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def derive_seed(seed: int, *parts: int | str) -> int:
    """Sub-seed for a (seed, key, key, ...) path; strings hash with FNV-1a."""
    _, h = splitmix64(seed & MASK64)
    for p in parts:
        key = fnv1a64(p) if isinstance(p, str) else p & MASK64
        _, h = splitmix64(h ^ key)
    return h


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    def __init__(self, seed: int):
        state = seed & MASK64
        s = []
        for _ in range(4):
            state, out = splitmix64(state)
            s.append(out)
        self.s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def integers(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        n = hi - lo + 1
        if n <= 0:
            raise ValueError(f"empty range [{lo}, {hi}]")
        limit = ((1 << 64) // n) * n
        while True:
            x = self.next_u64()
            if x < limit:
                return lo + x % n

    def normal(self) -> float:
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def poisson(self, mean: float) -> int:
        if mean < 0:
            raise ValueError("poisson mean must be non-negative")
        if mean == 0:
            return 0
        chunks = max(1, math.ceil(mean / 500.0))
        lam = mean / chunks
        total = 0
        for _ in range(chunks):
            u = self.uniform()
            k, p = 0, math.exp(-lam)
            cdf = p
            while u > cdf:
                k += 1
                p *= lam / k
                cdf += p
                if p == 0.0:
                    break
            total += k
        return total
