"""Small deterministic RNG for reproducible sampling across platforms.

xorshift64* : the 64-bit state is advanced by three shift-xor steps
(x ^= x >> 12; x ^= x << 25; x ^= x >> 27) and the output is the state
multiplied by 2685821657736338717 modulo 2^64. Identical seeds produce
identical streams everywhere, independent of Python's hash randomization
or stdlib implementation details.
"""

from __future__ import annotations

from typing import MutableSequence, Sequence, TypeVar

_MASK = (1 << 64) - 1
_MULT = 2685821657736338717

T = TypeVar("T")


class Xorshift64Star:
    def __init__(self, seed: int) -> None:
        # state must be nonzero; fold the seed onto a fixed odd constant
        self._state = (int(seed) ^ 0x9E3779B97F4A7C15) & _MASK or 0x106689D45497FDB5

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self._state = x
        return (x * _MULT) & _MASK

    def random(self) -> float:
        """Uniform float in [0, 1), 53 bits of precision."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange needs a positive bound")
        # rejection sampling avoids modulo bias
        limit = (_MASK + 1) - ((_MASK + 1) % n)
        while True:
            value = self.next_u64()
            if value < limit:
                return value % n

    def randint(self, low: int, high: int) -> int:
        return low + self.randrange(high - low + 1)

    def shuffle(self, items: MutableSequence[T]) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        if k > len(population):
            raise ValueError(f"cannot sample {k} from {len(population)} items")
        pool = list(population)
        self.shuffle(pool)
        return pool[:k]

    def choice(self, population: Sequence[T]) -> T:
        return population[self.randrange(len(population))]

    def hex_digits(self, n: int) -> str:
        out = []
        while len(out) < n:
            out.extend(f"{self.next_u64():016x}")
        return "".join(out[:n])
