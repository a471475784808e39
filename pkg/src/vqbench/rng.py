"""Seeded pseudo-random primitives used everywhere randomness is needed.

Two documented sources cover every stochastic step in the package, so any
result is reproducible byte-for-byte from integer seeds alone:

* :class:`Xorshift64Star`, a sequential 64-bit xorshift* generator for
  structural choices: shuffles, sampling without replacement, Bernoulli
  trials, bounded integer draws.
* counter-based splitmix64 fields (:func:`uniform_field`,
  :func:`normal_field`), stateless mixes of (seed, counter) for bulk
  numeric noise and weight initialization, vectorized with numpy.
"""

from __future__ import annotations

from typing import Iterable, MutableSequence, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_STAR = 0x2545F4914F6CDD1D


def mix64(x: int) -> int:
    """splitmix64 finalizer: a fixed bijective mix of a 64-bit integer."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MUL1) & MASK64
    x = ((x ^ (x >> 27)) * _MUL2) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *salts: int) -> int:
    """Derive an independent stream seed from a master seed plus salts.

    Same (seed, salts) always gives the same value; distinct salt tuples
    give unrelated streams for all practical purposes.
    """
    x = mix64((seed + _GOLDEN) & MASK64)
    for s in salts:
        x = mix64((x + _GOLDEN + mix64(s)) & MASK64)
    return x


def splitmix64_stream(seed: int, n: int) -> list[int]:
    """First ``n`` outputs of the sequential splitmix64 generator."""
    out = []
    state = seed & MASK64
    for _ in range(n):
        state = (state + _GOLDEN) & MASK64
        out.append(mix64(state))
    return out


class Xorshift64Star:
    """Sequential xorshift64* generator.

    The 64-bit state is seeded through splitmix64 so that small or zero
    seeds still start in a well-mixed nonzero state.
    """

    def __init__(self, seed: int):
        state = seed & MASK64
        while True:
            state = (state + _GOLDEN) & MASK64
            candidate = mix64(state)
            if candidate != 0:
                break
        self._state = candidate

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self._state = x
        return (x * _STAR) & MASK64

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) via rejection sampling."""
        if n <= 0:
            raise ValueError("bound must be positive")
        threshold = ((MASK64 + 1) // n) * n
        while True:
            r = self.next_u64()
            if r < threshold:
                return r % n

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def shuffle(self, items: MutableSequence[T]) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items: Sequence[T], k: int) -> list[T]:
        """k distinct items by partial Fisher-Yates, in drawn order."""
        n = len(items)
        if k < 0 or k > n:
            raise ValueError(f"cannot sample {k} items from a pool of {n}")
        pool = list(items)
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def choice(self, items: Sequence[T]) -> T:
        return items[self.below(len(items))]


def _counter_outputs(seed: int, start: int, n: int) -> np.ndarray:
    """Outputs start..start+n-1 of the splitmix64 stream for ``seed``."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    x = (np.uint64(seed & MASK64) + idx * np.uint64(_GOLDEN)).astype(np.uint64)
    x ^= x >> np.uint64(30)
    x *= np.uint64(_MUL1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_MUL2)
    x ^= x >> np.uint64(31)
    return x


def uniform_field(seed: int, shape: int | tuple[int, ...], start: int = 0) -> np.ndarray:
    """Array of float64 uniforms in [0, 1), a pure function of (seed, index)."""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    n = int(np.prod(shape, dtype=np.int64)) if shape else 1
    u = _counter_outputs(seed, start, n) >> np.uint64(11)
    return (u / float(1 << 53)).reshape(shape)


def normal_field(seed: int, shape: int | tuple[int, ...]) -> np.ndarray:
    """Array of standard normals via Box-Muller on counter-based uniforms."""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    n = int(np.prod(shape, dtype=np.int64)) if shape else 1
    m = (n + 1) // 2
    # u1 in (0, 1] so the log is finite; u2 in [0, 1).
    u1 = ((_counter_outputs(seed, 0, m) >> np.uint64(11)) + np.uint64(1)) / float(1 << 53)
    u2 = uniform_field(seed, m, start=m)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
    return z.reshape(shape)


def shuffled(items: Iterable[T], seed: int) -> list[T]:
    """Return a new list with a seeded shuffle applied."""
    out = list(items)
    Xorshift64Star(seed).shuffle(out)
    return out
