"""Deterministic 64-bit RNG for every randomized suite.

splitmix64 (Steele, Lea & Flood 2014): a single 64-bit state advanced by a
fixed odd constant, output mixed by two xor-shift-multiply rounds.  The same
seed yields the same stream on every platform and library version, which is
what the reproducibility contract requires; library generators are avoided
on purpose.  Normal deviates come from the Box-Muller transform applied to
pairs of uniforms.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        # 53 random bits -> double in [0, 1)
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + (hi - lo) * u

    def normal(self) -> float:
        # Box-Muller; guard the log against u1 == 0
        u1 = max(self.uniform(), 1e-300)
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, count: int) -> list[float]:
        return [self.normal() for _ in range(count)]
