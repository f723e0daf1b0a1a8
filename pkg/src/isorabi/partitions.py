"""Integer partitions (Young diagrams) and the box combinatorics used by the
irregular conformal block coefficients.

All box coordinates are 1-based: box ``(i, j)`` sits in row ``i``, column ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator


class InvalidBoxError(ValueError):
    """Raised when a box (i, j) does not belong to the diagram."""


@dataclass(frozen=True)
class Partition:
    rows: tuple[int, ...] = ()

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        if any(r < 1 for r in rows):
            raise ValueError(f"rows must be positive: {rows}")
        if any(a < b for a, b in zip(rows, rows[1:])):
            raise ValueError(f"rows must be weakly decreasing: {rows}")
        object.__setattr__(self, "rows", rows)

    @property
    def weight(self) -> int:
        return sum(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def row(self, i: int) -> int:
        """lambda_i, zero beyond the last row."""
        return self.rows[i - 1] if 1 <= i <= len(self.rows) else 0

    def column(self, j: int) -> int:
        """lambda'_j, the number of boxes in column j."""
        return sum(1 for r in self.rows if r >= j)

    def boxes(self) -> Iterator[tuple[int, int]]:
        for i, r in enumerate(self.rows, start=1):
            for j in range(1, r + 1):
                yield i, j

    def __contains__(self, box) -> bool:
        i, j = box
        return i >= 1 and j >= 1 and j <= self.row(i)

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.rows)) + "}" if self.rows else "∅"


EMPTY = Partition()


def conjugate(lam: Partition) -> Partition:
    if not lam.rows:
        return EMPTY
    return Partition(tuple(lam.column(j) for j in range(1, lam.rows[0] + 1)))


def hook_length(lam: Partition, i: int, j: int) -> int:
    if (i, j) not in lam:
        raise InvalidBoxError(f"box ({i}, {j}) is not in {lam}")
    return lam.row(i) + lam.column(j) - i - j + 1


@lru_cache(maxsize=None)
def _rows_of(n: int, max_part: int) -> tuple[tuple[int, ...], ...]:
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, max_part), 0, -1):
        for rest in _rows_of(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def partitions_of(n: int) -> list[Partition]:
    """All partitions of ``n`` in lexicographically decreasing order."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return [Partition(r) for r in _rows_of(n, n)]


def partition_pairs(level: int) -> Iterator[tuple[Partition, Partition]]:
    """Pairs (lambda, mu) with |lambda| + |mu| == level."""
    for a in range(level + 1):
        for lam in partitions_of(a):
            for mu in partitions_of(level - a):
                yield lam, mu
