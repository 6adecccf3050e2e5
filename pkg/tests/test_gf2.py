from __future__ import annotations

import random

from hypothesis import given, settings, strategies as st

from struxmm.search import gf2


def brute_solutions(eqs, nvars):
    return [x for x in range(1 << nvars)
            if all(gf2.popcount(r & x) % 2 == b for r, b in eqs)]


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.tuples(st.integers(0, (1 << n) - 1), st.integers(0, 1)),
                         max_size=10))))
def test_solve_matches_brute_force(case):
    n, eqs = case
    sols = brute_solutions(eqs, n)
    res = gf2.solve(eqs, n)
    if not sols:
        assert res.solution is None
        assert res.inconsistent_row is not None
        # the prefix up to the reported row is already inconsistent
        assert not brute_solutions(eqs[:res.inconsistent_row + 1], n)
        return
    assert res.solution in sols
    basis, bad = gf2.echelon(eqs, n)
    assert bad is None
    assert len(sols) == 1 << (n - basis.rank)
    for col in basis.free_columns():
        k = basis.kernel_vector(col)
        assert all(gf2.popcount(r & k) % 2 == 0 for r, _ in eqs)
        assert (res.solution ^ k) in sols
    free = random.Random(n).getrandbits(n)
    assert basis.solution(free) in sols


def test_matrices():
    rng = random.Random(4)
    for n in range(1, 7):
        M = gf2.random_invertible(n, rng)
        assert gf2.is_invertible(M, n)
        Mi = gf2.inverse(M, n)
        I = [1 << i for i in range(n)]
        assert gf2.matmul(M, Mi) == I and gf2.matmul(Mi, M) == I
        assert gf2.rank(M) == n
        assert gf2.from_lists(gf2.to_lists(M, n)) == M
    assert gf2.rank([0b11, 0b11, 0b00]) == 1
    assert not gf2.is_invertible([0b11, 0b11], 2)


def test_least_support_on_pure_system():
    # x0 + x1 = 1 has both unit vectors as solutions; free bits 0 pick a single-bit one
    res = gf2.solve([(0b11, 1)], 2)
    assert gf2.popcount(res.solution) == 1
