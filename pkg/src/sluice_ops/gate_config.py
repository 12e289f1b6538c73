"""Gate-opening patterns of an n-bay structure.

Bays are numbered 1..n from left to right looking downstream. A pattern is a
tuple of booleans (True = gate open) and is serialized as a '0'/'1' string,
bay 1 first.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

from .errors import DomainError


@dataclass(frozen=True)
class GateConfiguration:
    n: int
    open_mask: tuple[bool, ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"bay count must be positive, got {self.n}")
        if len(self.open_mask) != self.n:
            raise DomainError(
                f"mask has {len(self.open_mask)} entries for {self.n} bays")

    @classmethod
    def from_string(cls, mask: str) -> "GateConfiguration":
        if not mask or set(mask) - {"0", "1"}:
            raise DomainError(f"mask must be a non-empty 0/1 string, got {mask!r}")
        return cls(len(mask), tuple(c == "1" for c in mask))

    @property
    def m(self) -> int:
        return sum(self.open_mask)

    @property
    def open_bays(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, is_open in enumerate(self.open_mask) if is_open)

    def is_symmetric(self) -> bool:
        return self.open_mask == self.open_mask[::-1]

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.open_mask)


def is_symmetric(cfg: GateConfiguration) -> bool:
    return cfg.is_symmetric()


def _check(n: int, m: int | None = None) -> None:
    if n < 1:
        raise DomainError(f"bay count must be positive, got {n}")
    if m is not None and not 0 <= m <= n:
        raise DomainError(f"open count must satisfy 0 <= m <= n, got m={m}, n={n}")


def count_configs(n: int, m: int, symmetric: bool = False) -> int:
    """Number of ways to open ``m`` of ``n`` gates.

    Without the symmetry constraint this is C(n, m). A symmetric pattern is
    fixed by its left half plus, for odd n, the centre bay, giving
    C(n//2, m//2); an odd m needs the centre bay, so it is impossible for even n.
    """
    _check(n, m)
    if not symmetric:
        return comb(n, m)
    if n % 2 == 0 and m % 2 == 1:
        return 0
    return comb(n // 2, m // 2)


def total_configs(n: int, symmetric: bool = False) -> int:
    _check(n)
    return sum(count_configs(n, m, symmetric) for m in range(n + 1))


def enumerate_configs(n: int, m: int, symmetric: bool = False) -> list[GateConfiguration]:
    """All admissible patterns, ordered by the mask read as a binary number
    (bay 1 most significant), ascending."""
    _check(n, m)
    if symmetric:
        half = n // 2
        centre = n % 2 == 1
        if m % 2 == 1 and not centre:
            return []
        masks = []
        for left in combinations(range(half), m // 2):
            bits = [False] * n
            for i in left:
                bits[i] = bits[n - 1 - i] = True
            if m % 2 == 1:
                bits[half] = True
            masks.append(tuple(bits))
    else:
        masks = []
        for chosen in combinations(range(n), m):
            bits = [False] * n
            for i in chosen:
                bits[i] = True
            masks.append(tuple(bits))
    masks.sort(key=lambda bits: int("".join("1" if b else "0" for b in bits), 2))
    return [GateConfiguration(n, bits) for bits in masks]
