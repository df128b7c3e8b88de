"""Portable deterministic random number generation.

Every stochastic draw in the simulator flows through :class:`Rng` so that a
seed fully determines a run on any platform and in any implementation
language.  The generator and the derived distributions are pinned to named,
published algorithms rather than to whatever a host standard library happens
to ship:

* Core stream: xoshiro256** (Blackman/Vigna).  State is four 64-bit words;
  the output function is ``rotl(s1 * 5, 7) * 9`` followed by the standard
  xor/shift state transition with shift constants 17 and 45.
* Seeding: the 64-bit seed is expanded into the four state words with
  splitmix64 (increment 0x9E3779B97F4A7C15, mixing multipliers
  0xBF58476D1CE4E5B9 and 0x94D049BB133111EB, shifts 30/27/31).
* Uniform doubles: the top 53 bits of one output word, ``(x >> 11) * 2**-53``,
  giving values in [0, 1).
* Gaussians: Marsaglia's polar method.  Each attempt draws u then v in
  [-1, 1); the pair is rejected while ``s = u*u + v*v`` is 0 or >= 1.  An
  accepted pair yields two variates; the second (from v) is cached and
  returned by the next call before any new uniforms are consumed.
* Poisson counts: Knuth's product-of-uniforms method, suitable for the small
  rates used here.

All integer arithmetic is modulo 2**64.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state once; returns (output, next_state)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), state


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Rng:
    """xoshiro256** stream with the distribution helpers the simulator needs."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3", "_gauss_spare")

    def __init__(self, seed: int) -> None:
        state = seed & _MASK64
        words = []
        for _ in range(4):
            word, state = splitmix64_next(state)
            words.append(word)
        if not any(words):  # all-zero state is the one forbidden xoshiro state
            words[0] = 1
        self._s0, self._s1, self._s2, self._s3 = words
        self._gauss_spare: float | None = None

    def next_u64(self) -> int:
        """Next raw 64-bit output word."""
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * 1.1102230246251565e-16  # 2**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def gauss(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Normal variate via the polar method (see module docstring)."""
        spare = self._gauss_spare
        if spare is not None:
            self._gauss_spare = None
            return mu + sigma * spare
        while True:
            u = 2.0 * self.random() - 1.0
            v = 2.0 * self.random() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        f = math.sqrt(-2.0 * math.log(s) / s)
        self._gauss_spare = v * f
        return mu + sigma * (u * f)

    def poisson(self, rate: float) -> int:
        """Poisson count via Knuth's method; exact for the modest rates used."""
        if rate < 0.0:
            raise ValueError(f"poisson rate must be >= 0, got {rate}")
        if rate == 0.0:
            return 0
        if rate > 700.0:  # exp(-rate) underflows; far beyond simulator needs
            raise ValueError(f"poisson rate too large for exact sampling: {rate}")
        limit = math.exp(-rate)
        count = 0
        product = 1.0
        while True:
            product *= self.random()
            if product <= limit:
                return count
            count += 1
