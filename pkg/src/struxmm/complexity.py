"""Exponents, leading coefficients and cost bounds for structured restrictions."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .restriction import StructuredRestriction
from .tensor import Shape

BISECTION_BRACKET = (2.0, 3.5)
BISECTION_ITERATIONS = 200
F_SAMPLES = 10_000


class ComplexityError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentReport:
    omega0: float
    method: str
    equation_residual: float = 0.0

    def __float__(self):
        return self.omega0


@dataclass(frozen=True)
class CoefficientReport:
    L: float
    variant: str
    adds: int

    def __float__(self):
        return self.L


def exponent_from_rank(shape: Shape | Sequence[int], r: int) -> ExponentReport:
    shape = shape if isinstance(shape, Shape) else Shape(*shape)
    if r < 1:
        raise ComplexityError("rank must be positive")
    vol = shape.volume
    if vol == 1:
        raise ComplexityError("<1,1,1> gives no exponent (log of volume is zero)")
    return ExponentReport(3.0 * math.log(r) / math.log(vol), "rank-based")


def _log_sum(weights, logs, w: float) -> float:
    # log(sum s_i * exp(w/3 * log vol_i)) without overflow
    xs = [math.log(s) + w / 3.0 * lv for s, lv in zip(weights, logs)]
    top = max(xs)
    return top + math.log(sum(math.exp(x - top) for x in xs))


def _exponent_equation(res: StructuredRestriction, kfold: int):
    V = res.base.volume
    if V == 1:
        raise ComplexityError("base shape <1,1,1> has no exponent")
    for sh, _ in res.blocks:
        if sh.volume >= V:
            raise ComplexityError(
                f"block {sh} has volume {sh.volume} >= base volume {V}: no nontrivial bound")
    weights = [s for _, s in res.blocks]
    logs = [math.log(sh.volume) for sh, _ in res.blocks]
    logV = math.log(V)
    logk = math.log(kfold)

    def g(w: float) -> float:
        return _log_sum(weights, logs, w) - logk - w / 3.0 * logV

    def residual(w: float) -> float:
        rhs = sum(s * sh.volume ** (w / 3.0) for sh, s in res.blocks)
        return abs(kfold * V ** (w / 3.0) - rhs) / rhs

    return g, residual


def solve_exponent(res: StructuredRestriction, kfold: int | None = None,
                   bracket: tuple[float, float] = BISECTION_BRACKET) -> ExponentReport:
    """Root of ``k V^(w/3) = sum_i s_i vol_i^(w/3)`` by bisection."""
    kfold = res.kfold if kfold is None else kfold
    if not res.blocks:
        raise ComplexityError("restriction has no blocks")
    g, residual = _exponent_equation(res, kfold)
    lo, hi = bracket
    glo, ghi = g(lo), g(hi)
    if glo < 0 or ghi > 0:
        raise ComplexityError(f"exponent root outside [{lo}, {hi}]")
    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    w = lo if abs(g(lo)) <= abs(g(hi)) else hi
    method = "k-fold" if kfold != 1 else "restriction-based"
    return ExponentReport(w, method, residual(w))


def _check_denominator(den, what: str):
    if den <= 0:
        raise ComplexityError(f"{what} denominator {den} is not positive")


def leading_coeff_square(n: int, blocks: Iterable[tuple[int, int]], A: int) -> CoefficientReport:
    """Idealized coefficient ``A / (sum s_i n_i^2 - n^2) + 1`` for square blocks.

    ``blocks`` holds ``(n_i, s_i)`` pairs.
    """
    den = -n * n + sum(s * ni * ni for ni, s in blocks)
    _check_denominator(den, "leading coefficient")
    return CoefficientReport(A / den + 1.0, "idealized-square", A)


def leading_coeff_general(res: StructuredRestriction, A: int | None = None,
                          kfold: int | None = None) -> CoefficientReport:
    """Idealized coefficient ``A(n+m+p) / (sum s_i(n_i m_i p + n_i m p_i + n m_i p_i) - 3nmpk) + 1``."""
    A = res.total_adds if A is None else A
    if A is None:
        raise ComplexityError("no addition count given")
    kfold = res.kfold if kfold is None else kfold
    n, m, p = res.base
    den = -3 * n * m * p * kfold + sum(
        s * (a * b * p + a * m * c + n * b * c) for (a, b, c), s in
        ((tuple(sh), s) for sh, s in res.blocks))
    _check_denominator(den, "leading coefficient")
    variant = "k-fold" if kfold != 1 else "idealized-general"
    return CoefficientReport(A * (n + m + p) / den + 1.0, variant, A)


@dataclass(frozen=True)
class StrictBound:
    L: float
    d: float
    c: float


def strict_cost_bound(n: int, r: int, A: int, omega0: float | None = None) -> StrictBound:
    """Constants of the padded recursion bound ``T(N) <= L N^w - d N^2``."""
    if r <= n * n:
        raise ComplexityError("strict bound needs r > n^2")
    if omega0 is None:
        omega0 = math.log(r) / math.log(n)
    if omega0 >= 3:
        raise ComplexityError("strict bound needs omega0 < 3")
    c = 2.0 ** omega0 - 1.0
    d = (r * c + 4 * A) / (r - n * n)
    L = 2.0 * (n - 1) ** (3 - omega0) + d * (n - 1) ** (2 - omega0)
    return StrictBound(L, d, c)


def addition_growth(A: int, r: int, n: int, k: int) -> int:
    """Bound ``A (r^k - n^(2k)) / (r - n^2)`` on the additions of the k-th tensor power."""
    if r == n * n:
        raise ComplexityError("addition growth undefined for r = n^2")
    if k < 0:
        raise ComplexityError("k must be nonnegative")
    val = Fraction(A * (r ** k - n ** (2 * k)), r - n * n)
    return int(val) if val.denominator == 1 else val


# ---------------------------------------------------------------------------
# symmetrization and the omega_k convergence bound
# ---------------------------------------------------------------------------

def kronecker_restriction(r1: StructuredRestriction, r2: StructuredRestriction) -> StructuredRestriction:
    base = Shape(r1.base.n * r2.base.n, r1.base.m * r2.base.m, r1.base.p * r2.base.p)
    acc: Counter = Counter()
    for s1, c1 in r1.blocks:
        for s2, c2 in r2.blocks:
            acc[Shape(s1.n * s2.n, s1.m * s2.m, s1.p * s2.p)] += c1 * c2
    return StructuredRestriction(base, tuple(acc.items()), r1.kfold * r2.kfold)


def symmetrize(res: StructuredRestriction) -> StructuredRestriction:
    """Product of the restriction with its two cyclic images."""
    if not res.base.is_square():
        raise ComplexityError("symmetrize needs a square base shape")
    out = kronecker_restriction(kronecker_restriction(res, res.rotate(1)), res.rotate(2))
    try:
        before = solve_exponent(res).omega0
    except ComplexityError:
        return out
    after = solve_exponent(out).omega0
    if abs(before - after) > 1e-9:
        raise AssertionError(f"symmetrization changed the exponent: {before} vs {after}")
    return out


def is_symmetrized(res: StructuredRestriction) -> bool:
    counts = dict(res.blocks)
    if not res.base.is_square():
        return False
    for sh, s in res.blocks:
        if sh.is_square():
            continue
        if counts.get(sh.rotate(1), 0) != s or counts.get(sh.rotate(2), 0) != s:
            return False
    return True


@dataclass(frozen=True)
class OmegaKBound:
    k: int
    omega0: float
    omega1: float
    F: float
    bound: float


def omega_k_bound(res: StructuredRestriction, k: int) -> OmegaKBound:
    """Upper bound ``omega0 + log 2 / (F k)`` for the exponent of the k-th power.

    The restriction must list every non-square block in all three cyclic
    forms with equal multiplicity; the sum over all listed blocks is then the
    threefold sum over representatives.
    """
    if k < 1:
        raise ComplexityError("k must be >= 1")
    if not is_symmetrized(res):
        raise ComplexityError("restriction is not symmetrized; apply symmetrize() first")
    w0 = solve_exponent(res, kfold=1).omega0
    if all(sh.volume == 1 for sh, _ in res.blocks):
        return OmegaKBound(k, w0, w0, math.inf, w0)
    n = res.base.n
    weights = [s for _, s in res.blocks]
    logs = [math.log(sh.volume) for sh, _ in res.blocks]
    logn = math.log(n)

    def f(w):
        return _log_sum(weights, logs, w) - w * logn

    def fprime(w):
        xs = np.array([math.log(s) + w / 3.0 * lv for s, lv in zip(weights, logs)])
        wts = np.exp(xs - xs.max())
        return float((wts * (np.array(logs) - 3 * logn)).sum() / (3.0 * wts.sum()))

    target = -math.log(2.0)
    lo, hi = w0, w0 + 1.0
    while f(hi) > target:
        hi += 1.0
    for _ in range(BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
    w1 = hi
    samples = np.linspace(w0, w1, F_SAMPLES)
    F = min(abs(fprime(float(x))) for x in samples)
    F = min(F, abs(fprime(w0)), abs(fprime(w1)))
    return OmegaKBound(k, w0, w1, F, w0 + math.log(2.0) / (F * k))
