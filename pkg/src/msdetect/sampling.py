"""Seeded observation index sets.

Every random draw derives from a ``SeedSpec``: the pair (seed, stream) keys a
``numpy.random.SeedSequence``, so trial ``t`` of a sweep can use stream ``t``
and produce the same indices regardless of which worker runs it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSize
from .vecspace import WITH, WITHOUT, SampleIndexSet

_U64 = 2**64


@dataclass(frozen=True)
class SeedSpec:
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if not 0 <= int(value) < _U64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))


def _as_seed(seed) -> SeedSpec:
    return seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))


def draw_with_replacement(rng: np.random.Generator, n: int, m: int) -> SampleIndexSet:
    if n < 1 or m < 1:
        raise InvalidSize(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    return SampleIndexSet(rng.integers(0, n, size=m), n, WITH)


def draw_without_replacement(rng: np.random.Generator, n: int, m: int) -> SampleIndexSet:
    if not 1 <= m <= n:
        raise InvalidSize(f"need 1 <= m <= n, got n={n}, m={m}")
    # numpy's permutation is a Fisher-Yates shuffle; keep its first m entries
    return SampleIndexSet(rng.permutation(n)[:m], n, WITHOUT)


def draw(rng: np.random.Generator, n: int, m: int, mode: str) -> SampleIndexSet:
    if mode == WITH:
        return draw_with_replacement(rng, n, m)
    if mode == WITHOUT:
        return draw_without_replacement(rng, n, m)
    raise ValueError(f"unknown sampling mode {mode!r}")


def sample_with_replacement(n: int, m: int, seed) -> SampleIndexSet:
    return draw_with_replacement(_as_seed(seed).rng(), n, m)


def sample_without_replacement(n: int, m: int, seed) -> SampleIndexSet:
    return draw_without_replacement(_as_seed(seed).rng(), n, m)
