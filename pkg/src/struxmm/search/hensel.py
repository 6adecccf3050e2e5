"""Hensel lifting of Z2 decompositions to the integers.

Stage ``j`` holds coefficients ``x`` correct modulo ``2^j`` and looks for
``x + 2^j d`` correct modulo ``2^(j+1)`` with ``d`` a 0/1 vector.  Since
``2j >= j + 1`` only the part of the Brent residual linear in ``d``
survives, so ``d`` solves a linear system over Z2 whose matrix depends on
``x mod 2`` alone and whose right-hand side is ``(T(x) - target) / 2^j``.
Extra linear equations pin structure; pinned zeros are removed as
variables.  After each stage the coefficients are read in the symmetric
range and tested over the integers.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from ..rings import INTEGER, Z2
from ..tensor import Decomposition, RankOneTerm, target_tensor, tensor_of, verify
from . import gf2

SLOTS = "abc"
DEFAULT_MAX_K = 8
DEFAULT_ATTEMPTS = 8
DEFAULT_REPAIR = 5000


@dataclass(frozen=True)
class LiftConstraintSet:
    """Positions pinned to zero and factor pairs pinned equal.

    ``zeros`` holds ``(term, slot, entry)`` positions; ``equal`` holds
    ``((term1, slot1), (term2, slot2))`` pairs of whole factors.
    """

    zeros: frozenset = frozenset()
    equal: frozenset = frozenset()
    ring: object = INTEGER

    @classmethod
    def preserve_zeros(cls, dec: Decomposition) -> frozenset:
        return frozenset((t, s, e) for t, term in enumerate(dec.terms)
                         for s, f in enumerate(term.factors()) for e, x in enumerate(f) if not x)

    @classmethod
    def from_structure(cls, dec: Decomposition, groups: Iterable | None = None) -> frozenset:
        """Equal-factor pairs inside every structure group (default: all candidates)."""
        if groups is None:
            from ..structure import find_groups
            groups = find_groups(dec)
        pairs = set()
        for g in groups:
            idx = sorted(g.term_indices)
            for s in range(3):
                first: dict[tuple, int] = {}
                for t in idx:
                    f = dec.terms[t].factors()[s]
                    if f in first:
                        pairs.add(((first[f], s), (t, s)))
                    else:
                        first[f] = t
        return frozenset(pairs)

    @classmethod
    def build(cls, dec: Decomposition, zeros: bool = True, structure: bool = False,
              groups: Iterable | None = None) -> "LiftConstraintSet":
        return cls(cls.preserve_zeros(dec) if zeros else frozenset(),
                   cls.from_structure(dec, groups) if structure else frozenset())

    def satisfied_by(self, dec: Decomposition) -> bool:
        for t, s, e in self.zeros:
            if dec.terms[t].factors()[s][e]:
                return False
        for (t1, s1), (t2, s2) in self.equal:
            if dec.terms[t1].factors()[s1] != dec.terms[t2].factors()[s2]:
                return False
        return True


@dataclass(frozen=True)
class LiftFailure:
    stage: int
    constraint_class: str       # lift | zero | structure | max_k
    detail: str

    def describe(self) -> str:
        return f"lift failed at stage {self.stage} ({self.constraint_class}): {self.detail}"


@dataclass(frozen=True)
class LiftResult:
    decomposition: Decomposition | None
    stages: int
    failure: LiftFailure | None = None
    solved_ranks: tuple[int, ...] = field(default=())
    attempts: int = 1

    @property
    def ok(self) -> bool:
        return self.failure is None


def _sym(x: int, mod: int) -> int:
    r = x % mod
    return r - mod if r > mod // 2 else r


def _as_int(dec: Decomposition, coeffs) -> Decomposition:
    return Decomposition(dec.blocks, INTEGER, tuple(RankOneTerm(*map(tuple, c)) for c in coeffs))


class _System:
    """Variable numbering and the Brent-linearization rows for one decomposition."""

    def __init__(self, dec: Decomposition, cons: LiftConstraintSet, use_zero: bool):
        self.sizes = dec.factor_sizes
        self.var: dict[tuple[int, int, int], int] = {}
        for t in range(dec.rank):
            for s, size in enumerate(self.sizes):
                for e in range(size):
                    if use_zero and (t, s, e) in cons.zeros:
                        continue
                    self.var[(t, s, e)] = len(self.var)

    def lift_rows(self, x0: list, rhs: np.ndarray) -> list[tuple[int, int]]:
        sa, sb, sc = self.sizes
        rows: dict[int, int] = {}
        for t, (a, b, c) in enumerate(x0):
            bits = [[e for e, v in enumerate(f) if v & 1] for f in (a, b, c)]
            for s in range(3):
                o1, o2 = bits[(s + 1) % 3], bits[(s + 2) % 3]
                if not o1 or not o2:
                    continue
                for e in range(self.sizes[s]):
                    v = self.var.get((t, s, e))
                    if v is None:
                        continue
                    bit = 1 << v
                    for u in o1:
                        for w in o2:
                            idx = [0, 0, 0]
                            idx[s], idx[(s + 1) % 3], idx[(s + 2) % 3] = e, u, w
                            key = (idx[0] * sb + idx[1]) * sc + idx[2]
                            rows[key] = rows.get(key, 0) ^ bit
        flat = rhs.reshape(-1)
        eqs = [(rows.get(k, 0), int(flat[k]) & 1) for k in range(sa * sb * sc)
               if rows.get(k, 0) or int(flat[k]) & 1]
        return eqs

    def gauge_rows(self, x0: list) -> list[tuple[int, int]]:
        eqs = []
        for t, term in enumerate(x0):
            for s in (0, 1):
                e = next((e for e, v in enumerate(term[s]) if v & 1), None)
                v = None if e is None else self.var.get((t, s, e))
                if v is not None:
                    eqs.append((1 << v, 0))
        return eqs

    def equal_rows(self, cons: LiftConstraintSet, use_zero: bool) -> list[tuple[int, int]]:
        eqs = []
        for (t1, s1), (t2, s2) in sorted(cons.equal):
            for e in range(self.sizes[s1]):
                v1, v2 = self.var.get((t1, s1, e)), self.var.get((t2, s2, e))
                row = (0 if v1 is None else 1 << v1) ^ (0 if v2 is None else 1 << v2)
                if row:
                    eqs.append((row, 0))
        return eqs


def _check_input(dec: Decomposition, cons: LiftConstraintSet):
    if dec.ring != Z2:
        raise ValueError("lifting starts from a decomposition over Z2")
    if not verify(dec).ok:
        raise ValueError("input does not verify over Z2")
    if not cons.satisfied_by(dec):
        raise ValueError("input violates its own lift constraints")


def hensel_lift(dec: Decomposition, constraints: LiftConstraintSet | None = None,
                max_k: int = DEFAULT_MAX_K, attempts: int = DEFAULT_ATTEMPTS,
                repair_steps: int = DEFAULT_REPAIR, seed: int = 1729) -> LiftResult:
    """Lift ``dec`` (over Z2) to an integer decomposition, or explain why not.

    The stage systems are underdetermined, and a solution that is fine
    modulo ``2^(j+1)`` need not extend further.  Each stage therefore starts
    from the least-support solution (free variables 0) and then walks the
    solution space along kernel vectors for up to ``repair_steps`` moves,
    keeping moves that do not increase the integer residual ``|T(x) - T|_1``
    of the symmetric-range reading.  A residual of 0 ends the lift.  Further
    ``attempts`` restart with random free variables.  The reported failure
    is the first attempt's.
    """
    cons = constraints or LiftConstraintSet()
    _check_input(dec, cons)
    target = np.asarray(target_tensor(dec), dtype=object)
    rng = random.Random(seed)
    first = None
    for attempt in range(max(1, attempts)):
        res = _lift_once(dec, cons, target, max_k, rng, attempt > 0, repair_steps)
        if res.ok:
            return replace(res, attempts=attempt + 1)
        if res.failure.constraint_class != "lift" or res.stages == 1:
            return res if first is None else first
        first = first or res
    return replace(first, attempts=max(1, attempts))


def _lift_once(dec, cons, target, max_k, rng, random_free, repair_steps) -> LiftResult:
    x = [[list(f) for f in t.factors()] for t in dec.terms]
    ranks = []
    for j in range(1, max_k + 1):
        mod = 1 << j
        x = [[[_sym(v, mod) for v in f] for f in t] for t in x]
        cand = _as_int(dec, x)
        if verify(cand).ok and cons.satisfied_by(cand):
            return LiftResult(cand, j, None, tuple(ranks))
        if j == max_k:
            break
        R = np.asarray(tensor_of(cand), dtype=object) - target
        if any(int(v) % mod for v in R.flat):
            raise AssertionError(f"stage {j} invariant broken: residual not divisible by {mod}")
        rhs = np.vectorize(lambda v: (int(v) // mod) & 1, otypes=[object])(R)
        stage, failure = _solve_stage(dec, cons, x, rhs, j)
        if failure is not None:
            return LiftResult(None, j, failure, tuple(ranks))
        basis, inv = stage
        ranks.append(basis.rank)
        free = rng.getrandbits(basis.nvars) if random_free and basis.nvars else 0
        delta = basis.solution(free)

        x = _repair(x, basis, delta, inv, mod, target, rng, repair_steps)
    return LiftResult(None, max_k, LiftFailure(max_k, "max_k",
                      f"no integer solution read in the symmetric range up to 2^{max_k}"),
                      tuple(ranks))


def _term_tensor(term) -> np.ndarray:
    a, b, c = (np.array(f, dtype=np.int64) for f in term)
    return np.einsum("i,j,k->ijk", a, b, c)


def _sparse_kernel(basis) -> list[int]:
    """Kernel basis of ``basis`` reduced pairwise until no sum is lighter."""
    K = [basis.kernel_vector(c) for c in basis.free_columns()]
    changed = True
    while changed:
        changed = False
        K.sort(key=gf2.popcount)
        for i in range(len(K)):
            for j in range(len(K)):
                if i != j:
                    c = K[i] ^ K[j]
                    if gf2.popcount(c) < gf2.popcount(K[i]):
                        K[i] = c
                        changed = True
    return K


def _repair(x, basis, delta, inv, mod, target, rng, steps, temp=20.0, cooling=0.9995,
            stall=1500):
    """Apply ``delta`` to ``x``, then walk along kernel vectors toward zero integer residual.

    Toggling a bit of ``delta`` moves a coefficient by ``2^j`` and its
    symmetric reading modulo ``2^(j+1)`` flips between the two lifts; the
    residual ``T(x) - target`` is updated per touched term.  Moves use a
    sparsified kernel basis and annealed acceptance: a move raising the
    residual by ``d`` is taken with probability ``exp(-d / temp)``, and the
    temperature is reset after ``stall`` moves without a new best.
    """
    x = [[list(f) for f in term] for term in x]

    def toggle(xs, d):
        touched = {}
        for bit in gf2._bits(d):
            t, s, e = inv[bit]
            if t not in touched:
                touched[t] = [list(f) for f in xs[t]]
            touched[t][s][e] = _sym(touched[t][s][e] + mod, 2 * mod)
        return touched

    for t, term in toggle(x, delta).items():
        x[t] = term
    if not basis.free_columns() or steps <= 0:
        return x
    tt = [_term_tensor(term) for term in x]
    R = sum(tt) - np.asarray(target, dtype=np.int64)
    cur = int(np.abs(R).sum())
    if cur == 0:
        return x
    kernel = _sparse_kernel(basis)
    best, best_x = cur, list(x)
    t0, since = temp, 0
    for _ in range(steps):
        since += 1
        if since > stall:
            temp, since = t0, 0
        move = rng.choice(kernel)
        if rng.random() < 0.3:
            move ^= rng.choice(kernel)
        touched = toggle(x, move)
        new = {t: _term_tensor(term) for t, term in touched.items()}
        dR = sum(new[t] - tt[t] for t in new)
        val = int(np.abs(R + dR).sum())
        if val <= cur or rng.random() < math.exp((cur - val) / temp):
            R += dR
            cur = val
            for t, term in touched.items():
                x[t] = term
                tt[t] = new[t]
            if cur < best:
                best, best_x, since = cur, list(x), 0
                if cur == 0:
                    break
        temp = max(0.5, temp * cooling)
    return best_x


def _solve_stage(dec, cons, x, rhs, j):
    """Echelon basis of the stage system; when inconsistent, the smallest failing class."""
    x0 = [[[v & 1 for v in f] for f in t] for t in x]
    use_zero = bool(cons.zeros)
    use_eq = bool(cons.equal)
    full = _System(dec, cons, use_zero)
    eqs = full.lift_rows(x0, rhs) + (full.equal_rows(cons, use_zero) if use_eq else [])
    # the per-term rescalings (a, b, c) -> (u a, u^-1 b, c) and (a, v b, v^-1 c) commute
    # with every Brent equation; pinning one odd entry of a and of b removes them
    # from the solution space, unless that clashes with the structure pins
    for pinned in (full.gauge_rows(x0), []):
        basis, bad = gf2.echelon(eqs + pinned, len(full.var))
        if bad is None or bad < len(eqs):
            break
    if bad is None:
        return (basis, {v: k for k, v in full.var.items()}), None
    layers = [("lift", False, False), ("zero", True, False), ("structure", True, True)]
    for name, z, s in layers:
        if (z and not use_zero) or (s and not use_eq):
            continue
        sub = _System(dec, cons, z)
        sub_eqs = sub.lift_rows(x0, rhs) + (sub.equal_rows(cons, z) if s else [])
        r = gf2.solve(sub_eqs, len(sub.var))
        if r.solution is None:
            return None, LiftFailure(j, name, _describe_row(dec, sub_eqs, r.inconsistent_row, name))
    return None, LiftFailure(j, "structure", "combined constraints inconsistent")


def _describe_row(dec, eqs, idx, name) -> str:
    return f"{name} system inconsistent; first contradiction at equation {idx} of {len(eqs)}"


def lift_or_raise(dec: Decomposition, constraints: LiftConstraintSet | None = None,
                  max_k: int = DEFAULT_MAX_K) -> Decomposition:
    res = hensel_lift(dec, constraints, max_k)
    if not res.ok:
        raise ValueError(res.failure.describe())
    return res.decomposition


def coefficient_set(dec: Decomposition) -> set[int]:
    return {v for t in dec.terms for f in t.factors() for v in f}
