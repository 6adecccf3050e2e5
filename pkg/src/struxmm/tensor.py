"""Matrix multiplication tensors and their rank decompositions.

A decomposition of ``<n,m,p>`` is a list of rank-one terms ``a (x) b (x) c``
with ``a`` an ``n x m`` matrix, ``b`` an ``m x p`` matrix and ``c`` a
``p x n`` matrix.  All factors are stored flattened row-major as tuples of
Python ints, so values are immutable and arbitrary precision.  Entry
``c[k, i]`` is the coefficient with which the product contributes to the
output entry ``C[i, k]``; keeping the C-factor transposed makes the cyclic
symmetry a pure rotation of roles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .rings import INTEGER, Z2, Ring

_INT64_SAFE = 1 << 62


class DimensionError(ValueError):
    """Raised when factor sizes do not match the declared shape."""


class RingMismatchError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Shape:
    n: int
    m: int
    p: int

    def __post_init__(self):
        if min(self.n, self.m, self.p) < 1:
            raise ValueError(f"shape dimensions must be positive, got {tuple(self)}")

    def __iter__(self):
        return iter((self.n, self.m, self.p))

    def __str__(self):
        return f"<{self.n},{self.m},{self.p}>"

    @property
    def volume(self) -> int:
        return self.n * self.m * self.p

    def rotate(self, times: int = 1) -> "Shape":
        dims = (self.n, self.m, self.p)
        t = times % 3
        return Shape(*(dims[t:] + dims[:t]))

    def transpose(self) -> "Shape":
        return Shape(self.p, self.m, self.n)

    def is_square(self) -> bool:
        return self.n == self.m == self.p

    def factor_sizes(self) -> tuple[int, int, int]:
        return self.n * self.m, self.m * self.p, self.p * self.n


@dataclass(frozen=True)
class RankOneTerm:
    a: tuple[int, ...]
    b: tuple[int, ...]
    c: tuple[int, ...]

    def factors(self) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
        return self.a, self.b, self.c

    def is_zero(self) -> bool:
        return not any(self.a) or not any(self.b) or not any(self.c)

    @property
    def support(self) -> int:
        return sum(1 for f in self.factors() for x in f if x)


def _block_offsets(blocks: Sequence[Shape]) -> list[tuple[int, int, int]]:
    out = []
    oi = oj = ok = 0
    for s in blocks:
        out.append((oi, oj, ok))
        oi, oj, ok = oi + s.n, oj + s.m, ok + s.p
    return out


@dataclass(frozen=True)
class Decomposition:
    """An ordered list of rank-one terms for a (direct sum of) matmul tensor(s).

    ``blocks`` normally holds a single shape.  Direct sums keep one entry per
    summand; their factors live in the enclosing block-diagonal index space.
    """

    blocks: tuple[Shape, ...]
    ring: Ring
    terms: tuple[RankOneTerm, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "terms", tuple(self.terms))
        sa, sb, sc = self.factor_sizes
        for idx, t in enumerate(self.terms):
            if (len(t.a), len(t.b), len(t.c)) != (sa, sb, sc):
                raise DimensionError(
                    f"term {idx}: factor sizes {(len(t.a), len(t.b), len(t.c))} "
                    f"do not match {(sa, sb, sc)}"
                )

    @classmethod
    def from_terms(cls, shape: Shape | Sequence[int], ring: Ring,
                   terms: Iterable) -> "Decomposition":
        shape = shape if isinstance(shape, Shape) else Shape(*shape)
        built = []
        for t in terms:
            if isinstance(t, RankOneTerm):
                a, b, c = t.factors()
            else:
                a, b, c = t
            built.append(RankOneTerm(*(tuple(ring.reduce(x) for x in np.ravel(f).tolist())
                                       for f in (a, b, c))))
        return cls((shape,), ring, tuple(built))

    @property
    def dims(self) -> tuple[int, int, int]:
        return (sum(s.n for s in self.blocks), sum(s.m for s in self.blocks),
                sum(s.p for s in self.blocks))

    @property
    def shape(self) -> Shape:
        if len(self.blocks) == 1:
            return self.blocks[0]
        if not self.blocks:
            raise ValueError("empty decomposition has no shape")
        return Shape(*self.dims)

    @property
    def is_direct_sum(self) -> bool:
        return len(self.blocks) != 1

    @property
    def factor_sizes(self) -> tuple[int, int, int]:
        n, m, p = self.dims
        return n * m, m * p, p * n

    @property
    def rank(self) -> int:
        return len(self.terms)

    @property
    def support(self) -> int:
        return sum(t.support for t in self.terms)

    def with_terms(self, terms: Iterable[RankOneTerm]) -> "Decomposition":
        return Decomposition(self.blocks, self.ring, tuple(terms))

    def normalize(self) -> "Decomposition":
        """Drop zero terms."""
        return self.with_terms(t for t in self.terms if not t.is_zero())

    def factor_matrices(self, index: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n, m, p = self.dims
        t = self.terms[index]
        return (np.array(t.a, dtype=object).reshape(n, m),
                np.array(t.b, dtype=object).reshape(m, p),
                np.array(t.c, dtype=object).reshape(p, n))

    def max_abs(self) -> int:
        return max((abs(x) for t in self.terms for f in t.factors() for x in f), default=0)

    def __len__(self):
        return len(self.terms)


def empty_decomposition(ring: Ring = INTEGER) -> Decomposition:
    return Decomposition((), ring, ())


def standard_decomposition(shape: Shape | Sequence[int], ring: Ring = INTEGER) -> Decomposition:
    """One term ``a_ij (x) b_jk (x) c_ki`` per index triple."""
    shape = shape if isinstance(shape, Shape) else Shape(*shape)
    n, m, p = shape
    terms = []
    for i, j, k in product(range(n), range(m), range(p)):
        a = [0] * (n * m)
        b = [0] * (m * p)
        c = [0] * (p * n)
        a[i * m + j] = b[j * p + k] = c[k * n + i] = 1
        terms.append(RankOneTerm(tuple(a), tuple(b), tuple(c)))
    return Decomposition((shape,), ring, tuple(terms))


# ---------------------------------------------------------------------------
# target tensors and verification
# ---------------------------------------------------------------------------

def target_positions(dec_or_blocks) -> list[tuple[int, int, int]]:
    """Coordinates ``(alpha, beta, gamma)`` where the target tensor is one."""
    blocks = dec_or_blocks.blocks if isinstance(dec_or_blocks, Decomposition) else tuple(dec_or_blocks)
    N = sum(s.n for s in blocks)
    M = sum(s.m for s in blocks)
    P = sum(s.p for s in blocks)
    out = []
    for s, (oi, oj, ok) in zip(blocks, _block_offsets(blocks)):
        for i, j, k in product(range(s.n), range(s.m), range(s.p)):
            I, J, K = oi + i, oj + j, ok + k
            out.append((I * M + J, J * P + K, K * N + I))
    return out


def target_tensor(dec_or_blocks) -> np.ndarray:
    blocks = dec_or_blocks.blocks if isinstance(dec_or_blocks, Decomposition) else tuple(dec_or_blocks)
    N = sum(s.n for s in blocks)
    M = sum(s.m for s in blocks)
    P = sum(s.p for s in blocks)
    T = np.zeros((N * M, M * P, P * N), dtype=np.int64)
    for pos in target_positions(blocks):
        T[pos] = 1
    return T


def _factor_arrays(dec: Decomposition, dtype) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    sa, sb, sc = dec.factor_sizes
    r = dec.rank
    U = np.array([t.a for t in dec.terms], dtype=dtype).reshape(r, sa)
    V = np.array([t.b for t in dec.terms], dtype=dtype).reshape(r, sb)
    W = np.array([t.c for t in dec.terms], dtype=dtype).reshape(r, sc)
    return U, V, W


def tensor_of(dec: Decomposition) -> np.ndarray:
    """The tensor ``sum_t a_t (x) b_t (x) c_t`` reduced into the ring."""
    mx = dec.max_abs()
    safe = mx ** 3 * max(dec.rank, 1) < _INT64_SAFE
    if dec.ring.kind == "z2" or safe:
        U, V, W = _factor_arrays(dec, np.int64)
        T = np.einsum("ta,tb,tc->abc", U, V, W)
    else:
        U, V, W = _factor_arrays(dec, object)
        sa, sb, sc = dec.factor_sizes
        T = np.zeros((sa, sb, sc), dtype=object)
        for t in range(dec.rank):
            T += np.multiply.outer(np.multiply.outer(U[t], V[t]), W[t])
    mod = dec.ring.modulus
    if mod is not None:
        T = np.vectorize(dec.ring.reduce, otypes=[object])(T) if T.dtype == object else _reduce_array(T, dec.ring)
    return T


def _reduce_array(T: np.ndarray, ring: Ring) -> np.ndarray:
    mod = ring.modulus
    R = np.mod(T, mod)
    if mod > 2:
        R = np.where(R > mod // 2, R - mod, R)
    return R


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    rank: int
    first_violation: tuple[int, ...] | None = None
    equation_index: int | None = None
    expected: int | None = None
    actual: int | None = None

    def __bool__(self):
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return f"PASS rank={self.rank}"
        return (f"FAIL rank={self.rank} equation={self.equation_index} "
                f"indices={self.first_violation} expected={self.expected} got={self.actual}")


def _equation_indices(dec: Decomposition, alpha: int, beta: int, gamma: int) -> tuple[int, ...]:
    n, m, p = dec.dims
    i, j = divmod(alpha, m)
    j2, k = divmod(beta, p)
    k2, i2 = divmod(gamma, n)
    return (i, j, j2, k, k2, i2)


def _z2_masks(dec: Decomposition) -> list[tuple[int, int, int]]:
    out = []
    for t in dec.terms:
        out.append(tuple(sum(1 << idx for idx, x in enumerate(f) if x & 1) for f in t.factors()))
    return out


def z2_tensor_rows(masks: Iterable[tuple[int, int, int]], sa: int, sb: int) -> list[int]:
    """Bit-packed Z2 tensor: row ``alpha*sb + beta`` holds the gamma-bitmask."""
    rows = [0] * (sa * sb)
    for am, bm, cm in masks:
        a_bits = _bits(am)
        b_bits = _bits(bm)
        for al in a_bits:
            base = al * sb
            for be in b_bits:
                rows[base + be] ^= cm
    return rows


def _bits(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def target_rows_z2(blocks, sa: int, sb: int) -> list[int]:
    rows = [0] * (sa * sb)
    for al, be, ga in target_positions(blocks):
        rows[al * sb + be] ^= 1 << ga
    return rows


def _verify_z2(dec: Decomposition, target_rows: list[int] | None) -> VerificationReport:
    sa, sb, sc = dec.factor_sizes
    rows = z2_tensor_rows(_z2_masks(dec), sa, sb)
    want = target_rows if target_rows is not None else target_rows_z2(dec.blocks, sa, sb)
    for idx, (got, exp) in enumerate(zip(rows, want)):
        diff = got ^ exp
        if diff:
            gamma = (diff & -diff).bit_length() - 1
            alpha, beta = divmod(idx, sb)
            return VerificationReport(False, dec.rank, _equation_indices(dec, alpha, beta, gamma),
                                      idx * sc + gamma, (exp >> gamma) & 1, (got >> gamma) & 1)
    return VerificationReport(True, dec.rank)


def verify(dec: Decomposition, target: np.ndarray | None = None) -> VerificationReport:
    """Check the Brent equations of ``dec`` in its ring.

    ``target`` overrides the matmul tensor (used by searches on a tensor with
    a subtracted pattern).  Equation indices are the flat positions in the
    ``(nm, mp, pn)`` coordinate array.
    """
    if dec.ring.kind == "z2":
        rows = None
        if target is not None:
            sa, sb, sc = dec.factor_sizes
            rows = [0] * (sa * sb)
            for al, be, ga in zip(*np.nonzero(np.mod(target, 2))):
                rows[al * sb + be] |= 1 << int(ga)
        return _verify_z2(dec, rows)
    T = tensor_of(dec)
    want = target_tensor(dec) if target is None else target
    if dec.ring.modulus is not None:
        want = _reduce_array(np.asarray(want, dtype=np.int64), dec.ring)
    bad = np.argwhere(T != want)
    if len(bad) == 0:
        return VerificationReport(True, dec.rank)
    al, be, ga = (int(x) for x in bad[0])
    sa, sb, sc = dec.factor_sizes
    return VerificationReport(False, dec.rank, _equation_indices(dec, al, be, ga),
                              (al * sb + be) * sc + ga, int(want[al, be, ga]), int(T[al, be, ga]))


# ---------------------------------------------------------------------------
# symmetries and constructions
# ---------------------------------------------------------------------------

def _transpose_flat(f: Sequence[int], rows: int, cols: int) -> tuple[int, ...]:
    return tuple(f[r * cols + c] for c in range(cols) for r in range(rows))


def cyclic_permute(dec: Decomposition) -> Decomposition:
    """``<n,m,p>`` to ``<m,p,n>`` by rotating roles ``(a, b, c) -> (b, c, a)``."""
    blocks = tuple(s.rotate() for s in dec.blocks)
    terms = tuple(RankOneTerm(t.b, t.c, t.a) for t in dec.terms)
    return Decomposition(blocks, dec.ring, terms)


def transpose_permute(dec: Decomposition) -> Decomposition:
    """``<n,m,p>`` to ``<p,m,n>`` via ``(AB)^T = B^T A^T``."""
    n, m, p = dec.dims
    blocks = tuple(s.transpose() for s in dec.blocks)
    terms = tuple(RankOneTerm(_transpose_flat(t.b, m, p), _transpose_flat(t.a, n, m),
                              _transpose_flat(t.c, p, n)) for t in dec.terms)
    return Decomposition(blocks, dec.ring, terms)


def _embed(f: Sequence[int], rows: int, cols: int, R: int, C: int, r0: int, c0: int) -> list[int]:
    out = [0] * (R * C)
    for r in range(rows):
        for c in range(cols):
            out[(r0 + r) * C + c0 + c] = f[r * cols + c]
    return out


def direct_sum(d1: Decomposition, d2: Decomposition) -> Decomposition:
    """Block-diagonal direct sum; term count is additive."""
    if d1.ring != d2.ring:
        if not d1.blocks:
            d1 = empty_decomposition(d2.ring)
        elif not d2.blocks:
            d2 = empty_decomposition(d1.ring)
        else:
            raise RingMismatchError(f"cannot add decompositions over {d1.ring} and {d2.ring}")
    if not d2.blocks:
        return d1
    if not d1.blocks:
        return d2
    n1, m1, p1 = d1.dims
    n2, m2, p2 = d2.dims
    N, M, P = n1 + n2, m1 + m2, p1 + p2
    terms = []
    for t in d1.terms:
        terms.append(RankOneTerm(tuple(_embed(t.a, n1, m1, N, M, 0, 0)),
                                 tuple(_embed(t.b, m1, p1, M, P, 0, 0)),
                                 tuple(_embed(t.c, p1, n1, P, N, 0, 0))))
    for t in d2.terms:
        terms.append(RankOneTerm(tuple(_embed(t.a, n2, m2, N, M, n1, m1)),
                                 tuple(_embed(t.b, m2, p2, M, P, m1, p1)),
                                 tuple(_embed(t.c, p2, n2, P, N, p1, n1))))
    return Decomposition(d1.blocks + d2.blocks, d1.ring, tuple(terms))


def _kron_flat(f: Sequence[int], r1: int, c1: int, g: Sequence[int], r2: int, c2: int) -> tuple[int, ...]:
    C = c1 * c2
    out = [0] * (r1 * r2 * C)
    for a in range(r1):
        for b in range(c1):
            x = f[a * c1 + b]
            if not x:
                continue
            for c in range(r2):
                row = (a * r2 + c) * C + b * c2
                for d in range(c2):
                    y = g[c * c2 + d]
                    if y:
                        out[row + d] = x * y
    return tuple(out)


def kronecker_product(d1: Decomposition, d2: Decomposition) -> Decomposition:
    """Decomposition of ``<n1 n2, m1 m2, p1 p2>`` with ``r1 * r2`` terms."""
    if d1.ring != d2.ring:
        raise RingMismatchError(f"cannot multiply decompositions over {d1.ring} and {d2.ring}")
    if d1.is_direct_sum or d2.is_direct_sum:
        raise ValueError("kronecker_product expects plain (non direct-sum) decompositions")
    n1, m1, p1 = d1.shape
    n2, m2, p2 = d2.shape
    ring = d1.ring
    terms = []
    for s in d1.terms:
        for t in d2.terms:
            a = _kron_flat(s.a, n1, m1, t.a, n2, m2)
            b = _kron_flat(s.b, m1, p1, t.b, m2, p2)
            c = _kron_flat(s.c, p1, n1, t.c, p2, n2)
            if ring.modulus is not None:
                a, b, c = (tuple(ring.reduce(x) for x in f) for f in (a, b, c))
            terms.append(RankOneTerm(a, b, c))
    return Decomposition((Shape(n1 * n2, m1 * m2, p1 * p2),), ring, tuple(terms))


# ---------------------------------------------------------------------------
# reduction modulo 2^k
# ---------------------------------------------------------------------------

def sign_normal(f: Sequence[int]) -> tuple[tuple[int, ...], int]:
    """Normalize a factor up to sign: first nonzero entry positive."""
    for x in f:
        if x:
            if x < 0:
                return tuple(-y for y in f), -1
            return tuple(f), 1
    return tuple(f), 1


@dataclass(frozen=True)
class ModReduction:
    decomposition: Decomposition
    zero_terms: tuple[int, ...]
    duplicate_pairs: tuple[tuple[int, int], ...]
    new_shared_factors: tuple[tuple[int, int, str], ...]


def reduce_mod(dec: Decomposition, ring: Ring) -> ModReduction:
    """Reduce coefficients into ``ring`` and report what the reduction merged.

    Zero terms stay in the output (flagged).  ``duplicate_pairs`` are term
    pairs that coincide after reduction; ``new_shared_factors`` are pairs that
    now share a factor (slot ``"a"``, ``"b"`` or ``"c"``) although they did not
    before, even up to sign.
    """
    if ring.modulus is None:
        raise ValueError("reduce_mod targets Z2 or Z/2^k")
    red = tuple(RankOneTerm(*(tuple(ring.reduce(x) for x in f) for f in t.factors()))
                for t in dec.terms)
    out = Decomposition(dec.blocks, ring, red)
    zeros = tuple(i for i, t in enumerate(red) if t.is_zero())
    dups = []
    first_seen: dict[tuple, int] = {}
    for i, t in enumerate(red):
        key = t.factors()
        if key in first_seen:
            dups.append((first_seen[key], i))
        else:
            first_seen[key] = i
    shared = []
    for slot, name in enumerate("abc"):
        buckets: dict[tuple, list[int]] = {}
        for i, t in enumerate(red):
            if i in zeros:
                continue
            buckets.setdefault(t.factors()[slot], []).append(i)
        for idxs in buckets.values():
            for x in range(len(idxs)):
                for y in range(x + 1, len(idxs)):
                    i, j = idxs[x], idxs[y]
                    before_i = sign_normal(dec.terms[i].factors()[slot])[0]
                    before_j = sign_normal(dec.terms[j].factors()[slot])[0]
                    if before_i != before_j:
                        shared.append((i, j, name))
    return ModReduction(out, zeros, tuple(dups), tuple(shared))


def change_ring(dec: Decomposition, ring: Ring) -> Decomposition:
    """Reinterpret coefficients in another ring (reducing when needed)."""
    return Decomposition(dec.blocks, ring, tuple(
        RankOneTerm(*(tuple(ring.reduce(x) for x in f) for f in t.factors())) for t in dec.terms))


__all__ = [
    "Shape", "RankOneTerm", "Decomposition", "VerificationReport", "DimensionError",
    "RingMismatchError", "ModReduction", "standard_decomposition", "empty_decomposition",
    "verify", "tensor_of", "target_tensor", "target_positions", "cyclic_permute",
    "transpose_permute", "direct_sum", "kronecker_product", "reduce_mod", "change_ring",
    "sign_normal", "Z2", "INTEGER",
]
