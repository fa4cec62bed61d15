"""Portable deterministic random number generation.

Every stochastic choice in this package goes through the SplitMix64
generator below rather than the standard library's Mersenne Twister.
SplitMix64 is a 64-bit integer recurrence that is trivial to reimplement
in other languages (the wire-protocol client mirrors it with BigInt),
which makes seeded runs reproducible bit-for-bit across processes,
platforms, and implementations.

Stream splitting: substream seeds are derived with :func:`derive`, which
folds a base seed together with a sequence of string/int labels through
the SplitMix64 finalizer. The convention used across the package:

* environment generation draws from ``derive(seed, "<env> gen")``
* the per-episode augmentation coin from ``derive(aug_seed, "coin", seed)``
* augmentation of observation *t* from ``derive(aug_seed, "obs", seed, t)``
* a scripted policy for an episode from ``derive(seed, "policy")``
* episode *k* of a suite gets seed ``derive(suite_seed, "episode", k)``
  masked to 53 bits so it survives a JSON number round-trip.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Seeds that must cross a JSON boundary stay below 2**53 so that
# languages with double-based numbers keep them exact.
JSON_SAFE_SEED_MASK = (1 << 53) - 1


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective avalanche on 64-bit integers."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def fnv1a64(text: str) -> int:
    """FNV-1a hash of a string's UTF-8 bytes, used to fold labels into seeds."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


def derive(seed: int, *keys: int | str) -> int:
    """Derive a substream seed from a base seed and a label path."""
    h = mix64(seed)
    for key in keys:
        folded = fnv1a64(key) if isinstance(key, str) else key & _MASK64
        h = mix64(h ^ folded)
    return h


class Rng:
    """SplitMix64 stream with the handful of draw helpers the package needs."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return mix64(self._state)

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n). Uses plain modulo; the bias at
        64 bits is negligible for the small ranges used here and keeps
        the draw trivially portable."""
        if n <= 0:
            raise ValueError("randrange requires n >= 1")
        return self.next_u64() % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + self.randrange(hi - lo + 1)

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0**-53)

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq, k: int) -> list:
        """k distinct elements, drawn by a partial Fisher-Yates pass."""
        n = len(seq)
        if k > n:
            raise ValueError(f"cannot sample {k} from {n} items")
        idx = list(range(n))
        for i in range(k):
            j = i + self.randrange(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return [seq[idx[i]] for i in range(k)]
