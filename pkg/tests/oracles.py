"""Slow, obviously-correct reference implementations used by the tests.

None of these share code with the package beyond the data classes.
"""

from __future__ import annotations

import itertools
import math
import operator


def brent_ok(dec, modulus=None) -> bool:
    """Entrywise Brent check with explicit loops.

    ``a`` is ``n x m`` row-major, ``b`` is ``m x p`` and ``c`` is ``p x n``
    with entry ``[k, i]``, so the target is
    ``sum_t a[i,j] b[j',k] c[k',i'] = [j=j'][k=k'][i=i']``.
    """
    return first_violation(dec, modulus) is None


def first_violation(dec, modulus=None):
    blocks = dec.blocks
    N = sum(s.n for s in blocks)
    M = sum(s.m for s in blocks)
    P = sum(s.p for s in blocks)
    offs, o = [], (0, 0, 0)
    for s in blocks:
        offs.append((o, s))
        o = (o[0] + s.n, o[1] + s.m, o[2] + s.p)

    def target(i, j, j2, k, k2, i2):
        if not (j == j2 and k == k2 and i == i2):
            return 0
        for (n0, m0, p0), s in offs:
            if n0 <= i < n0 + s.n and m0 <= j < m0 + s.m and p0 <= k < p0 + s.p:
                return 1
        return 0

    for i, j, j2, k, k2, i2 in itertools.product(range(N), range(M), range(M), range(P),
                                                 range(P), range(N)):
        tot = 0
        for t in dec.terms:
            tot += t.a[i * M + j] * t.b[j2 * P + k] * t.c[k2 * N + i2]
        want = target(i, j, j2, k, k2, i2)
        if modulus is not None:
            tot %= modulus
            want %= modulus
        if tot != want:
            return (i, j, j2, k, k2, i2)
    return None


def naive_matmul(A, B):
    A = [list(map(int, r)) for r in A]
    B = [list(map(int, r)) for r in B]
    p = len(B[0]) if B else 0
    cols = [list(c) for c in zip(*B)] if B else [[] for _ in range(p)]
    return [[sum(map(operator.mul, row, col)) for col in cols] for row in A]


def strassen_counts(N: int) -> tuple[int, int]:
    """Pure Strassen down to 1x1 at N = 2^k: 7^k mults and 6(7^k - 4^k) adds."""
    k = int(round(math.log2(N)))
    assert 2 ** k == N
    return 7 ** k, 6 * (7 ** k - 4 ** k)


def standard_counts(n: int, m: int, p: int) -> tuple[int, int]:
    return n * m * p, n * (m - 1) * p


def bisect_root(f, lo, hi, it=200):
    """Plain bisection for a decreasing function with ``f(lo) > 0 > f(hi)``."""
    for _ in range(it):
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def exponent_oracle(base, blocks) -> float:
    """Root of ``(nmp)^(w/3) = sum s_i (n_i m_i p_i)^(w/3)``."""
    V = base[0] * base[1] * base[2]
    return bisect_root(lambda w: sum(s * (a * b * c) ** (w / 3) for (a, b, c), s in blocks)
                       - V ** (w / 3), 2.0, 3.5)


def linear_cost(rows) -> int:
    """Additions of each distinct row (up to sign) alone: nnz - 1 plus scalings by |x| > 1."""
    cost = 0
    seen = set()
    for r in rows:
        lead = next((x for x in r if x), 1)
        key = tuple(x if lead > 0 else -x for x in r)
        if key in seen:
            continue
        seen.add(key)
        nz = [x for x in r if x]
        if nz:
            cost += len(nz) - 1 + sum(1 for x in nz if abs(x) != 1)
    return cost
