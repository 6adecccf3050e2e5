from __future__ import annotations

import numpy as np
from hypothesis import given, settings, strategies as st

import oracles
from struxmm import catalog
from struxmm.additions import compile_rows, count_additions, phase_rows


def test_strassen_and_winograd_counts():
    assert count_additions(catalog.strassen()).A == 18
    w = count_additions(catalog.winograd())
    assert w.A == 15
    assert sum(w.per_phase) == 15


def test_without_cse_is_the_naive_count():
    for dec in (catalog.strassen(), catalog.winograd(), catalog.load("s333_r23")):
        naive = sum(oracles.linear_cost(r) for r in phase_rows(dec))
        assert count_additions(dec, cse=False).A == naive
        assert count_additions(dec).A <= naive


def test_programs_replay_on_shipped():
    for name, dec in catalog.shipped().items():
        if dec.rank > 30:
            continue
        cnt = count_additions(dec)
        for prog, rows in zip(cnt.phases, phase_rows(dec)):
            assert prog.replay_rows() == [list(r) for r in rows], name


def test_program_evaluates_matrices():
    rows = [[1, 0, 1, 0], [0, 1, 1, -1], [1, 1, 2, -1], [0, 0, 0, 0]]
    prog = compile_rows(rows)
    rng = np.random.default_rng(0)
    xs = [rng.integers(-5, 5, (3, 3)).astype(object) for _ in range(4)]
    got = prog.evaluate(xs, zero=np.zeros((3, 3), dtype=object))
    for r, g in zip(rows, got):
        want = sum((c * x for c, x in zip(r, xs)), np.zeros((3, 3), dtype=object))
        assert np.array_equal(g, want)


coef_row = st.lists(st.integers(-2, 2), min_size=5, max_size=5)


@settings(max_examples=300, deadline=None)
@given(st.lists(coef_row, min_size=1, max_size=8))
def test_cse_replays_exactly_and_never_costs_more(rows):
    prog = compile_rows(rows, 5)
    assert prog.replay_rows() == rows
    assert prog.cost <= oracles.linear_cost(rows)
    ints = [3, -7, 11, 2, 5]
    assert prog.evaluate(ints) == [sum(c * x for c, x in zip(r, ints)) for r in rows]
