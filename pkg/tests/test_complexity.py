from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from struxmm.complexity import (ComplexityError, addition_growth, exponent_from_rank,
                                is_symmetrized, kronecker_restriction, leading_coeff_general,
                                leading_coeff_square, omega_k_bound, solve_exponent,
                                strict_cost_bound, symmetrize)
from struxmm.restriction import StructuredRestriction
from struxmm.tensor import Shape

R = StructuredRestriction.from_counts


def test_rank_exponents():
    assert abs(exponent_from_rank((2, 2, 2), 7).omega0 - math.log2(7)) < 1e-14
    for shape in [(2, 2, 2), (3, 3, 3), (2, 3, 4)]:
        assert abs(exponent_from_rank(shape, shape[0] * shape[1] * shape[2]).omega0 - 3) < 1e-14
    with pytest.raises(ComplexityError):
        exponent_from_rank((1, 1, 1), 1)


@pytest.mark.parametrize("base,blocks,want", [
    ((6, 6, 6), [((1, 1, 1), 137), ((1, 1, 2), 8)], 2.80496),
    ((6, 6, 6), [((1, 1, 1), 117), ((1, 1, 2), 18)], 2.8016),
    ((3, 3, 3), [((1, 1, 1), 15), ((1, 1, 2), 2), ((1, 2, 2), 1)], 2.836),
    ((2, 2, 2), [((1, 1, 1), 7)], 2.8074),
    ((216, 216, 216), [((1, 1, 1), 3_581_065)], 2.80751),
])
def test_exponents_against_oracle(base, blocks, want):
    rep = solve_exponent(R(base, blocks))
    assert abs(rep.omega0 - oracles.exponent_oracle(base, blocks)) < 1e-12
    assert abs(rep.omega0 - want) < 5e-4
    assert rep.equation_residual <= 1e-12


def test_block_volume_equal_to_base_is_rejected():
    with pytest.raises(ComplexityError):
        solve_exponent(R((1, 1, 2), [((1, 1, 2), 1)]))


def test_leading_coefficients():
    assert abs(leading_coeff_square(2, [(1, 7)], 18).L - 7) < 1e-12
    assert abs(leading_coeff_square(2, [(1, 7)], 15).L - 6) < 1e-12
    r666 = R((6, 6, 6), [((1, 1, 1), 117), ((1, 1, 2), 18)])
    # by hand: 117*18 + 18*30 - 648 = 1998 and 15*9 + 2*15 + 24 - 81 = 108
    assert abs(leading_coeff_general(r666, 691).L - (1 + 691 * 18 / 1998)) < 1e-12
    r333 = R((3, 3, 3), [((1, 1, 1), 15), ((1, 1, 2), 2), ((1, 2, 2), 1)])
    assert abs(leading_coeff_general(r333, 61).L - (1 + 61 * 9 / 108)) < 1e-12
    with pytest.raises(ComplexityError):
        leading_coeff_general(R((2, 2, 2), [((1, 1, 1), 4)]), 10)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.lists(st.tuples(st.integers(1, 3), st.integers(1, 50)),
                                    min_size=1, max_size=3), st.integers(1, 5000))
def test_general_matches_square(n, blocks, A):
    blocks = [(ni, s) for ni, s in blocks if ni < n]
    den = sum(s * ni * ni for ni, s in blocks) - n * n
    if not blocks or den <= 0:
        return
    res = R((n, n, n), [((ni, ni, ni), s) for ni, s in blocks])
    assert abs(leading_coeff_general(res, A).L - leading_coeff_square(n, blocks, A).L) < 1e-12


def test_strict_bound_strassen():
    assert strict_cost_bound(2, 7, 18).L == 40


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10 ** 6), st.integers(2, 400), st.integers(2, 12))
def test_addition_growth_k1(A, r, n):
    if r == n * n:
        return
    assert addition_growth(A, r, n, 1) == A


def test_addition_growth_strassen_power():
    # 18 (7^k - 4^k) / 3 = 6 (7^k - 4^k)
    for k in range(1, 8):
        assert addition_growth(18, 7, 2, k) == 6 * (7 ** k - 4 ** k)


small_block = st.sampled_from([(1, 1, 1), (1, 1, 2), (1, 2, 1), (2, 1, 1), (1, 2, 2), (2, 2, 1)])


def wide(res):
    return solve_exponent(res, bracket=(0.0, 8.0)).omega0


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(small_block, st.integers(1, 40)), min_size=1, max_size=4),
       small_block, st.integers(0, 60))
def test_exponent_monotone(blocks, extra, singles):
    base = (6, 6, 6)
    blocks = blocks + [((1, 1, 1), singles)]
    res = R(base, blocks)
    w = wide(res)
    # one more copy of any block raises the exponent
    w_more = wide(R(base, blocks + [(extra, 1)]))
    assert w_more > w
    if res.term_count >= 216:
        return          # omega0 >= 3: the structure no longer helps
    d = dict(res.blocks)
    # merging vol singletons into one block of that volume (< 216) lowers it
    vol = Shape(*extra).volume
    if vol > 1 and d.get(Shape(1, 1, 1), 0) >= vol:
        merged = dict(d)
        merged[Shape(1, 1, 1)] -= vol
        merged[Shape(*extra)] = merged.get(Shape(*extra), 0) + 1
        assert wide(R(base, list(merged.items()))) < w
    # replacing one <1,1,2> copy by two singletons raises it
    if d.get(Shape(1, 1, 2), 0) >= 1:
        d[Shape(1, 1, 2)] -= 1
        d[Shape(1, 1, 1)] = d.get(Shape(1, 1, 1), 0) + 2
        w_split = wide(R(base, list(d.items())))
        assert w_split > w


def test_symmetrize_and_omega_k():
    res = R((6, 6, 6), [((1, 1, 1), 117), ((1, 1, 2), 18)])
    assert not is_symmetrized(res)
    sym = symmetrize(res)
    assert is_symmetrized(sym)
    assert sym.base == Shape(216, 216, 216)
    assert abs(solve_exponent(sym).omega0 - solve_exponent(res).omega0) < 1e-9
    b1, b2 = omega_k_bound(sym, 1), omega_k_bound(sym, 10)
    assert b1.omega0 <= b2.bound < b1.bound
    assert b1.omega1 > b1.omega0 and b1.F > 0
    with pytest.raises(ComplexityError):
        omega_k_bound(res, 3)


def test_kronecker_restriction_exponent():
    s = R((2, 2, 2), [((1, 1, 1), 7)])
    k = kronecker_restriction(s, s)
    assert dict(k.blocks) == {Shape(1, 1, 1): 49}
    assert abs(solve_exponent(k).omega0 - solve_exponent(s).omega0) < 1e-12
