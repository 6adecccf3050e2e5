from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from struxmm import catalog
from struxmm.executor import (Counters, PlanError, compile_plan, multiply, self_check,
                              standard_multiply)
from struxmm.tensor import direct_sum, standard_decomposition


def rand(rng, shape, lo=-9, hi=9):
    if max(abs(lo), abs(hi)) < 2 ** 62:
        return rng.integers(lo, hi, shape).astype(object)
    r = random.Random(int(rng.integers(1 << 30)))
    return np.array([r.randint(lo, hi) for _ in range(shape[0] * shape[1])],
                    dtype=object).reshape(shape)


def check(plan, N, M, P, seed=0, counters=None, lo=-9, hi=9):
    rng = np.random.default_rng(seed)
    A, B = rand(rng, (N, M), lo, hi), rand(rng, (M, P), lo, hi)
    C = multiply(A, B, plan, counters)
    assert C.tolist() == oracles.naive_matmul(A, B)


@pytest.mark.parametrize("name", ["strassen", "winograd", "s333_r23", "mp333_r23"])
def test_plans_self_check_and_multiply(name):
    plan = compile_plan(catalog.load(name), n0=2)
    assert all(self_check(o) for o in plan.schedule)
    for N, M, P in [(1, 1, 1), (2, 2, 2), (7, 5, 3), (13, 13, 13), (16, 9, 11), (30, 2, 29)]:
        check(plan, N, M, P, seed=N * M * P)


def test_alternation_schedule():
    plan = compile_plan(catalog.load("s333_r23"), n0=2)
    assert len(plan.schedule) == 3
    bases = {tuple(o.base) for o in plan.schedule}
    assert bases == {(3, 3, 3)}
    assert len({o.block_shapes for o in plan.schedule}) > 1
    assert len(compile_plan(catalog.strassen()).schedule) == 1


def test_large_entries_use_exact_integers():
    plan = compile_plan(catalog.strassen(), n0=1)
    big = 10 ** 30
    check(plan, 9, 9, 9, lo=-big, hi=big)


def test_standard_multiply_and_counters():
    rng = np.random.default_rng(5)
    A, B = rand(rng, (4, 6)), rand(rng, (6, 3))
    assert standard_multiply(A, B).tolist() == oracles.naive_matmul(A, B)
    c = Counters()
    multiply(A, B, compile_plan(catalog.strassen(), n0=100), c)
    assert (c.mults, c.adds) == oracles.standard_counts(4, 6, 3)


def test_strassen_counts_at_powers_of_two():
    plan = compile_plan(catalog.strassen(), n0=1)
    for k in range(5):
        c = Counters()
        check(plan, 2 ** k, 2 ** k, 2 ** k, counters=c)
        assert (c.mults, c.adds) == oracles.strassen_counts(2 ** k)


def test_direct_sum_is_rejected():
    with pytest.raises(PlanError):
        compile_plan(direct_sum(catalog.strassen(), standard_decomposition((1, 1, 1))))


def test_dimension_errors():
    plan = compile_plan(catalog.strassen())
    with pytest.raises(ValueError):
        multiply(np.zeros((2, 3), dtype=object), np.zeros((2, 3), dtype=object), plan)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 40), st.integers(1, 6),
       st.sampled_from(["strassen", "winograd", "s333_r23"]))
def test_random_sizes(N, M, P, n0, name):
    check(compile_plan(catalog.load(name), n0=n0), N, M, P, seed=N + 41 * M + 1681 * P)


def test_six_by_six_scheme():
    plan = compile_plan(catalog.load("mp666_r161"), n0=4)
    rng = random.Random(2)
    for _ in range(3):
        check(plan, *(rng.randint(20, 60) for _ in range(3)), seed=rng.randrange(1000))
