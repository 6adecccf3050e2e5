"""Linear algebra over GF(2) on int bitsets.

A vector is an int whose bit ``i`` is coordinate ``i``; a matrix is a list of
row ints.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence


def popcount(x: int) -> int:
    return x.bit_count()


def rank(rows: Sequence[int]) -> int:
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top not in basis:
                basis[top] = r
                break
            r ^= basis[top]
    return len(basis)


def is_invertible(rows: Sequence[int], n: int) -> bool:
    return len(rows) == n and rank(rows) == n


def inverse(rows: Sequence[int], n: int) -> list[int]:
    """Inverse of an ``n x n`` matrix; ``ValueError`` if singular."""
    aug = [(rows[i], 1 << i) for i in range(n)]
    for col in range(n):
        bit = 1 << col
        piv = next((r for r in range(col, n) if aug[r][0] & bit), None)
        if piv is None:
            raise ValueError("matrix is singular over GF(2)")
        aug[col], aug[piv] = aug[piv], aug[col]
        pr, pi = aug[col]
        for r in range(n):
            if r != col and aug[r][0] & bit:
                aug[r] = (aug[r][0] ^ pr, aug[r][1] ^ pi)
    return [aug[i][1] for i in range(n)]


def matmul(A: Sequence[int], B: Sequence[int]) -> list[int]:
    """Product of bit-row matrices (row ``i`` of ``A`` selects rows of ``B``)."""
    out = []
    for row in A:
        acc = 0
        j = 0
        while row:
            if row & 1:
                acc ^= B[j]
            row >>= 1
            j += 1
        out.append(acc)
    return out


def random_invertible(n: int, rng: random.Random) -> list[int]:
    """Uniform element of GL(n, 2) by rejection sampling."""
    while True:
        rows = [rng.getrandbits(n) for _ in range(n)]
        if is_invertible(rows, n):
            return rows


def to_lists(rows: Sequence[int], cols: int) -> list[list[int]]:
    return [[(r >> j) & 1 for j in range(cols)] for r in rows]


def from_lists(mat) -> list[int]:
    return [sum((int(x) & 1) << j for j, x in enumerate(row)) for row in mat]


@dataclass(frozen=True)
class SolveResult:
    solution: int | None        # bitmask over variables
    inconsistent_row: int | None
    rank: int


class EchelonBasis:
    """Online echelon form of a GF(2) system with a fixed column order.

    Variables are renumbered so that bit ``i`` is the ``i``-th column of
    the order; each basis row's lowest bit is its pivot.  Solutions and
    kernel vectors come from back substitution in original numbering.
    """

    def __init__(self, nvars: int, column_order: Sequence[int]):
        self.nvars = nvars
        self.order = list(column_order)
        self.pos = {c: i for i, c in enumerate(self.order)}
        self.rows: dict[int, tuple[int, int]] = {}       # pivot bit -> (row, rhs)
        self._desc: list[int] | None = None

    def remap(self, r: int) -> int:
        out = 0
        for c in _bits(r):
            if c not in self.pos:
                raise ValueError("column_order does not cover every variable in use")
            out |= 1 << self.pos[c]
        return out

    def insert(self, r: int, b: int) -> bool:
        """Add an equation; ``False`` when it reduces to ``0 = 1``."""
        r, b = self.remap(r), b & 1
        while r:
            low = r & -r
            hit = self.rows.get(low)
            if hit is None:
                self.rows[low] = (r, b)
                self._desc = None
                return True
            r ^= hit[0]
            b ^= hit[1]
        return not b

    @property
    def rank(self) -> int:
        return len(self.rows)

    def free_columns(self) -> list[int]:
        return [c for c, i in self.pos.items() if (1 << i) not in self.rows]

    def _back(self, y: int, homogeneous: bool) -> int:
        if self._desc is None:
            self._desc = sorted(self.rows, reverse=True)
        for low in self._desc:
            r, b = self.rows[low]
            if (0 if homogeneous else b) ^ (popcount(r & y & ~low) & 1):
                y |= low
        x = 0
        for i in _bits(y):
            x |= 1 << self.order[i]
        return x

    def solution(self, free: int = 0) -> int:
        y = 0
        for c in _bits(free):
            if c in self.pos and (1 << self.pos[c]) not in self.rows:
                y |= 1 << self.pos[c]
        return self._back(y, False)

    def kernel_vector(self, column: int) -> int:
        """The kernel element with free ``column`` set and every other free column clear."""
        bit = 1 << self.pos[column]
        if bit in self.rows:
            raise ValueError("column is a pivot column")
        return self._back(bit, True)


def degree_order(equations: Sequence[tuple[int, int]], nvars: int) -> list[int]:
    deg = [0] * nvars
    for r, _ in equations:
        for c in _bits(r):
            deg[c] += 1
    return sorted(range(nvars), key=lambda c: (deg[c], c))


def echelon(equations: Sequence[tuple[int, int]], nvars: int,
            column_order: Sequence[int] | None = None) -> tuple[EchelonBasis, int | None]:
    """Basis of the system and the index of the first inconsistent equation (or ``None``)."""
    basis = EchelonBasis(nvars, degree_order(equations, nvars) if column_order is None else column_order)
    for idx, (r, b) in enumerate(equations):
        if not basis.insert(r, b):
            return basis, idx
    return basis, None


def solve(equations: Sequence[tuple[int, int]], nvars: int,
          column_order: Sequence[int] | None = None, free: int = 0) -> SolveResult:
    """Solve ``row . x = rhs`` for all ``(row, rhs)``.

    Free variables take their bit of ``free`` (default all 0).  Pivots
    follow ``column_order`` (default: ascending column degree, so rarely
    used variables are determined first and the free ones are the widely
    shared).  Equations are inserted one at a time into an echelon basis,
    which keeps the work bit-parallel.  ``inconsistent_row`` is the index of
    the first equation that reduces to ``0 = 1``.
    """
    basis, bad = echelon(equations, nvars, column_order)
    if bad is not None:
        return SolveResult(None, bad, basis.rank)
    return SolveResult(basis.solution(free), None, basis.rank)


def _bits(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out
