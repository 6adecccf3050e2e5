from __future__ import annotations

from pathlib import Path

import pytest

import oracles
from struxmm import catalog
from struxmm.io import read_decomposition
from struxmm.rings import INTEGER, Z2
from struxmm.search.hensel import (LiftConstraintSet, coefficient_set, hensel_lift,
                                   lift_or_raise)
from struxmm.structure import analyze
from struxmm.tensor import change_ring, standard_decomposition, verify

DATA = Path(__file__).parent / "data"


def test_strassen_mod2_lifts_to_signed_scheme():
    z = change_ring(catalog.strassen(), Z2)
    cons = LiftConstraintSet.build(z)
    res = hensel_lift(z, cons)
    assert res.ok
    out = res.decomposition
    assert out.ring == INTEGER and verify(out).ok and oracles.brent_ok(out)
    assert coefficient_set(out) <= {-1, 0, 1}
    assert cons.satisfied_by(out)
    assert change_ring(out, Z2).terms == z.terms


@pytest.mark.parametrize("name", sorted(catalog.shipped()))
def test_round_trip_on_shipped(name):
    dec = catalog.shipped()[name]
    if coefficient_set(dec) > {-1, 0, 1}:
        pytest.skip("not a {-1,0,1} scheme")
    z = change_ring(dec, Z2)
    res = hensel_lift(z, LiftConstraintSet.build(z))
    assert res.ok, res.failure
    out = res.decomposition
    assert verify(out).ok
    assert change_ring(out, Z2).terms == z.terms
    assert coefficient_set(out) <= {-1, 0, 1}


def test_single_term_unchanged():
    z = standard_decomposition((1, 1, 1), Z2)
    res = hensel_lift(z)
    assert res.ok and res.stages == 1
    assert res.decomposition.terms == z.terms and res.decomposition.ring == INTEGER


def test_structure_preserving_lift_keeps_groups():
    z = change_ring(catalog.load("s333_r23"), Z2)
    _, sel, _ = analyze(z)
    cons = LiftConstraintSet.build(z, structure=True, groups=sel)
    assert cons.equal
    res = hensel_lift(z, cons)
    assert res.ok and cons.satisfied_by(res.decomposition)


def test_zero_class_failure():
    d = read_decomposition(DATA / "zero_fail_223.dec")
    res = hensel_lift(d, LiftConstraintSet.build(d, zeros=True))
    assert not res.ok
    assert res.failure.constraint_class == "zero" and res.failure.stage == 1
    assert "(zero)" in res.failure.describe()
    # the same scheme lifts once zeros may change
    assert hensel_lift(d, LiftConstraintSet.build(d, zeros=False)).ok


def test_structure_class_failure():
    d = read_decomposition(DATA / "structure_fail_223.dec")
    res = hensel_lift(d, LiftConstraintSet.build(d, zeros=True, structure=True))
    assert not res.ok and res.failure.constraint_class == "structure"
    assert hensel_lift(d, LiftConstraintSet.build(d, zeros=True)).ok


def test_lift_class_failure_without_repair():
    d = read_decomposition(DATA / "lift_fail_222.dec")
    cons = LiftConstraintSet.build(d, zeros=False)
    res = hensel_lift(d, cons, attempts=1, repair_steps=0)
    assert not res.ok and res.failure.constraint_class == "lift" and res.failure.stage == 2
    assert hensel_lift(d, cons).ok


def test_max_k_failure_and_raise():
    z = change_ring(catalog.strassen(), Z2)
    res = hensel_lift(z, max_k=1)
    assert not res.ok and res.failure.constraint_class == "max_k"
    with pytest.raises(ValueError):
        lift_or_raise(z, max_k=1)


def test_input_checks():
    with pytest.raises(ValueError):
        hensel_lift(catalog.strassen())
    bad = change_ring(standard_decomposition((2, 2, 2)), Z2)
    with pytest.raises(ValueError):
        hensel_lift(bad.with_terms(bad.terms[:-1]))


def test_deterministic():
    z = change_ring(catalog.load("mp333_r23"), Z2)
    a = hensel_lift(z, LiftConstraintSet.build(z), seed=5)
    b = hensel_lift(z, LiftConstraintSet.build(z), seed=5)
    assert a.decomposition.terms == b.decomposition.terms
