from __future__ import annotations

import itertools
import random

from hypothesis import given, settings, strategies as st

from struxmm import catalog
from struxmm.restriction import (StructuredRestriction, dumps_restriction, loads_restriction,
                                 read_restriction)
from struxmm.rings import Z2
from struxmm.structure import (_exponent_of, analyze, block_list, check_group, find_groups,
                               select_disjoint, structure_indicator, to_restriction)
from struxmm.tensor import Shape, change_ring, reduce_mod, standard_decomposition


def test_standard_222_groups():
    dec = standard_decomposition((2, 2, 2), Z2)
    groups = find_groups(dec)
    assert groups
    for g in groups:
        assert check_group(dec, g)
    res, sel, _ = analyze(dec)
    assert res.term_count == dec.rank


def test_s333_indicator():
    dec = catalog.load("s333_r23")
    res, sel, cands = analyze(dec)
    assert structure_indicator(res) == "1^15 2^2 4"
    for g in cands:
        assert check_group(dec, g)
    assert sum(g.size for g in block_list(dec, sel)) == dec.rank


def test_mod2_only_sharing_creates_a_group():
    """mp666_r161 has no pair sharing the mod-2-only factor over Z; its Z2 image does."""
    dec = catalog.load("mp666_r161")
    red = reduce_mod(dec, Z2)
    assert red.new_shared_factors
    pairs = {(i, j) for i, j, _ in red.new_shared_factors}
    z_groups = {frozenset(g.term_indices) for g in find_groups(dec) if g.size == 2}
    z2_groups = [g for g in find_groups(red.decomposition)
                 if g.block_shape.volume == 2 and g.size == 2]
    z2_sets = {frozenset(g.term_indices) for g in z2_groups}
    new = [p for p in pairs if frozenset(p) in z2_sets and frozenset(p) not in z_groups]
    assert new
    g = next(g for g in z2_groups if frozenset(g.term_indices) == frozenset(new[0]))
    assert sorted(g.block_shape) == [1, 1, 2]
    assert check_group(red.decomposition, g)


def test_selection_is_disjoint_and_optimal_on_small_instances():
    rng = random.Random(3)
    decs = [catalog.load("s333_r23"), catalog.load("mp333_r23"),
            change_ring(catalog.load("s333_r23"), Z2), standard_decomposition((2, 2, 2), Z2)]
    checked = 0
    for dec in decs:
        cands = find_groups(dec)
        for _ in range(10):
            sub = rng.sample(cands, min(len(cands), rng.randint(1, 12)))
            for obj in ("coverage", "exponent"):
                sel = select_disjoint(sub, obj, dec.shape, dec.rank)
                assert all(not g.overlaps(h) for g, h in itertools.combinations(sel, 2))
                best = _exhaustive(sub, obj, dec)
                assert abs(_value(sel, obj, dec) - best) < 1e-9
                checked += 1
    assert checked >= 40


def _disjoint_families(groups):
    for r in range(len(groups) + 1):
        for fam in itertools.combinations(groups, r):
            if all(not g.overlaps(h) for g, h in itertools.combinations(fam, 2)):
                yield fam


def _value(sel, obj, dec):
    if obj == "coverage" or dec.rank >= dec.shape.volume:
        return sum(g.size for g in sel)
    return -_exponent_of(dec.shape, dec.rank, list(sel))


def _exhaustive(groups, obj, dec):
    return max(_value(f, obj, dec) for f in _disjoint_families(groups))


def test_restriction_round_trip_and_files():
    res = read_restriction(catalog_path("r666.txt"))
    assert res.base == Shape(6, 6, 6)
    assert dict(res.blocks) == {Shape(1, 1, 1): 117, Shape(1, 1, 2): 18}
    assert res.total_adds == 691
    assert loads_restriction(dumps_restriction(res)) == res


def catalog_path(name):
    from importlib import resources
    return resources.files("struxmm") / "data" / name


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_indicator_invariant_under_term_order(r):
    dec = catalog.load("s333_r23")
    terms = list(dec.terms)
    r.shuffle(terms)
    shuffled = dec.with_terms(terms)
    assert structure_indicator(analyze(shuffled)[0]) == structure_indicator(analyze(dec)[0])


def test_indicator_format():
    res = StructuredRestriction.from_counts((6, 6, 6), [((1, 1, 1), 117), ((1, 1, 2), 18)])
    assert structure_indicator(res) == "1^117 2^18"
    dec = catalog.strassen()
    assert structure_indicator(to_restriction(dec, [])) == "1^7"
