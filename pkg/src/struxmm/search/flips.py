"""Flip-graph random walks over Z2.

A flip rewrites two terms sharing a factor,
``x(x)y(x)z + x(x)y'(x)z'  ->  x(x)y(x)(z+z') + x(x)(y+y')(x)z'``,
which keeps the tensor over Z2.  A reduction merges two terms agreeing in
two slots.  Rank only decreases through reductions.

Factors are int bitmasks: bit ``i`` is entry ``i`` of the flattened factor.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..rings import Z2
from ..tensor import (Decomposition, RankOneTerm, Shape, standard_decomposition,
                      target_rows_z2, z2_tensor_rows)

Mask = tuple[int, int, int]

DEFAULT_SEED = 1729
SPOT_CHECK = 1 << 10


class FlipError(ValueError):
    pass


class SearchVerificationError(AssertionError):
    pass


# ---------------------------------------------------------------------------
# conversion
# ---------------------------------------------------------------------------

def to_masks(dec: Decomposition) -> list[Mask]:
    return [tuple(sum(1 << i for i, x in enumerate(f) if x & 1) for f in t.factors())
            for t in dec.terms]


def from_masks(shape: Shape, masks: Sequence[Mask], blocks=None) -> Decomposition:
    sizes = shape.factor_sizes()
    terms = [RankOneTerm(*(tuple((f >> i) & 1 for i in range(sz)) for f, sz in zip(t, sizes)))
             for t in masks]
    return Decomposition(blocks or (shape,), Z2, tuple(terms))


# ---------------------------------------------------------------------------
# moves on decompositions
# ---------------------------------------------------------------------------

_SLOTS = {"a": 0, "b": 1, "c": 2}


def _slot(s) -> int:
    return _SLOTS[s] if isinstance(s, str) else int(s)


def flip(dec: Decomposition, t1: int, t2: int, shared_slot="a",
         protected: Sequence[int] = ()) -> Decomposition:
    """Flip terms ``t1``, ``t2`` around their common factor in ``shared_slot``.

    With slot a: ``a(x)b(x)c + a(x)b'(x)c'`` becomes
    ``a(x)b(x)(c+c') + a(x)(b+b')(x)c'``; other slots by role rotation.
    Zero terms produced by the move are kept (``normalize`` drops them).
    """
    if dec.ring != Z2:
        raise FlipError("flips are defined over Z2")
    if t1 in protected or t2 in protected:
        raise FlipError("cannot flip a protected term")
    if t1 == t2:
        raise FlipError("a flip needs two distinct terms")
    s = _slot(shared_slot)
    s1, s2 = (s + 1) % 3, (s + 2) % 3
    f1 = list(dec.terms[t1].factors())
    f2 = list(dec.terms[t2].factors())
    if f1[s] != f2[s]:
        raise FlipError(f"terms {t1} and {t2} do not share slot {'abc'[s]}")
    f1[s2] = tuple((x + y) & 1 for x, y in zip(f1[s2], f2[s2]))
    f2[s1] = tuple((x + y) & 1 for x, y in zip(f1[s1], f2[s1]))
    terms = list(dec.terms)
    terms[t1] = RankOneTerm(*f1)
    terms[t2] = RankOneTerm(*f2)
    return dec.with_terms(terms)


def reduce(dec: Decomposition) -> Decomposition:
    """Merge the first pair of terms agreeing in two slots; drop zero terms.

    Returns ``dec`` itself when nothing applies.
    """
    terms = [t for t in dec.terms if not t.is_zero()]
    for i in range(len(terms)):
        fi = terms[i].factors()
        for j in range(i + 1, len(terms)):
            fj = terms[j].factors()
            same = [s for s in range(3) if fi[s] == fj[s]]
            if len(same) >= 2:
                k = ({0, 1, 2} - set(same[:2])).pop()
                merged = list(fi)
                merged[k] = tuple((x + y) & 1 for x, y in zip(fi[k], fj[k]))
                new = RankOneTerm(*merged)
                rest = terms[:i] + terms[i + 1:j] + terms[j + 1:]
                if not new.is_zero():
                    rest.insert(i, new)
                return dec.with_terms(rest)
    if len(terms) != len(dec.terms):
        return dec.with_terms(terms)
    return dec


# ---------------------------------------------------------------------------
# incremental walk state
# ---------------------------------------------------------------------------

class WalkState:
    """Live terms with per-slot buckets of equal factors."""

    def __init__(self, masks: Sequence[Mask]):
        self.terms: dict[int, list[int]] = {}
        self.ids: list[int] = []
        self.pos: dict[int, int] = {}
        self.buckets: tuple[dict, dict, dict] = ({}, {}, {})
        self.next_id = 0
        for t in masks:
            if all(t):
                self.add(list(t))

    @property
    def rank(self) -> int:
        return len(self.ids)

    def masks(self) -> list[Mask]:
        return [tuple(self.terms[i]) for i in self.ids]

    def add(self, t: list[int]) -> int:
        tid = self.next_id
        self.next_id += 1
        self.terms[tid] = t
        self.pos[tid] = len(self.ids)
        self.ids.append(tid)
        for s in range(3):
            self.buckets[s].setdefault(t[s], set()).add(tid)
        return tid

    def remove(self, tid: int) -> None:
        t = self.terms.pop(tid)
        for s in range(3):
            b = self.buckets[s][t[s]]
            b.discard(tid)
            if not b:
                del self.buckets[s][t[s]]
        k = self.pos.pop(tid)
        last = self.ids.pop()
        if last != tid:
            self.ids[k] = last
            self.pos[last] = k

    def set_factor(self, tid: int, s: int, value: int) -> None:
        t = self.terms[tid]
        b = self.buckets[s][t[s]]
        b.discard(tid)
        if not b:
            del self.buckets[s][t[s]]
        t[s] = value
        self.buckets[s].setdefault(value, set()).add(tid)

    def apply_flip(self, i: int, j: int, s: int) -> None:
        s1, s2 = (s + 1) % 3, (s + 2) % 3
        ti, tj = self.terms[i], self.terms[j]
        self.set_factor(i, s2, ti[s2] ^ tj[s2])
        self.set_factor(j, s1, tj[s1] ^ ti[s1])
        for tid in (i, j):
            if tid in self.terms and not all(self.terms[tid]):
                self.remove(tid)

    def reduce_around(self, tid: int) -> int:
        """Merge ``tid`` with partners agreeing in two slots; returns merges done."""
        done = 0
        while tid in self.terms:
            t = self.terms[tid]
            partner = None
            for s1, s2, s3 in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
                b1 = self.buckets[s1][t[s1]]
                b2 = self.buckets[s2][t[s2]]
                small, big = (b1, b2) if len(b1) <= len(b2) else (b2, b1)
                for o in small:
                    if o != tid and o in big:
                        partner = (o, s3)
                        break
                if partner:
                    break
            if not partner:
                break
            o, s3 = partner
            value = t[s3] ^ self.terms[o][s3]
            self.remove(o)
            done += 1
            if value:
                self.set_factor(tid, s3, value)
            else:
                self.remove(tid)
        return done

    def reduce_all(self) -> int:
        done = 0
        for tid in list(self.ids):
            if tid in self.terms:
                done += self.reduce_around(tid)
        return done

    def random_flip(self, rng: random.Random, tries: int = 64):
        """Pick a term, a slot and a partner in that slot's bucket.

        Returns ``(i, j, slot)`` or None if no flip was found in ``tries``.
        """
        ids = self.ids
        if len(ids) < 2:
            return None
        for _ in range(tries):
            i = ids[rng.randrange(len(ids))]
            s = rng.randrange(3)
            b = self.buckets[s][self.terms[i][s]]
            if len(b) < 2:
                continue
            others = sorted(b)
            j = others[rng.randrange(len(others))]
            if j == i:
                continue
            return i, j, s
        return None

    def any_flip(self) -> bool:
        return any(len(b) >= 2 for bs in self.buckets for b in bs.values())


# ---------------------------------------------------------------------------
# searches
# ---------------------------------------------------------------------------

@dataclass
class SearchState:
    """A search configuration and its result.

    ``current`` is a Z2 decomposition of ``matmul - protected``; the optional
    ``protected`` terms stay out of every move and are added back by
    :meth:`full`.
    """

    current: Decomposition
    protected: tuple[RankOneTerm, ...] = ()
    objective: str = "rank"
    seed: int = DEFAULT_SEED
    budget: int = 100_000
    plateau: int = 100_000
    target_rank: int | None = None
    steps: int = 0
    trajectory: list = field(default_factory=list)

    def full(self) -> Decomposition:
        return self.current.with_terms(tuple(self.current.terms) + tuple(self.protected))

    @property
    def target_rows(self) -> list[int]:
        shape = self.current.shape
        sa, sb, _ = shape.factor_sizes()
        rows = target_rows_z2(self.current.blocks, sa, sb)
        for m in to_masks(Decomposition(self.current.blocks, Z2, self.protected)):
            for idx, v in enumerate(z2_tensor_rows([m], sa, sb)):
                rows[idx] ^= v
        return rows


def _resolve_seed(seed: int) -> int:
    if seed == 0:
        return random.SystemRandom().getrandbits(63) or 1
    return seed


def _check(masks, rows, sa, sb, where: str) -> None:
    if z2_tensor_rows(masks, sa, sb) != rows:
        raise SearchVerificationError(f"walk state stopped verifying at {where}")


def step1_state(shape: Shape | Sequence[int], pattern: Sequence[RankOneTerm] | None = None,
                **kw) -> SearchState:
    """Start state for searching ``<n,m,p>`` minus a protected pattern of standard terms."""
    shape = shape if isinstance(shape, Shape) else Shape(*shape)
    std = standard_decomposition(shape, Z2)
    pattern = tuple(pattern or ())
    keep = [t for t in std.terms if t not in pattern]
    if len(keep) + len(pattern) != len(std.terms):
        raise ValueError("pattern terms must be distinct standard terms")
    return SearchState(std.with_terms(keep), pattern, **kw)


def pattern_221(shape: Shape | Sequence[int]) -> tuple[RankOneTerm, ...]:
    """The standard terms of the leading ``<2,2,1>`` sub-multiplication."""
    shape = shape if isinstance(shape, Shape) else Shape(*shape)
    n, m, p = shape
    if n < 2 or m < 2:
        raise ValueError("shape too small for a <2,2,1> pattern")
    std = standard_decomposition(shape, Z2)
    want = {(i, j, 0) for i in range(2) for j in range(2)}
    out = []
    idx = 0
    for i in range(n):
        for j in range(m):
            for k in range(p):
                if (i, j, k) in want:
                    out.append(std.terms[idx])
                idx += 1
    return tuple(out)


def _walk(state: SearchState, score: Callable[[WalkState], tuple] | None) -> SearchState:
    """Shared random walk; ``score`` (higher is better) ranks states of equal rank."""
    rng = random.Random(_resolve_seed(state.seed))
    dec = state.current
    shape = dec.shape
    sa, sb, _ = shape.factor_sizes()
    rows = state.target_rows
    start = to_masks(dec.normalize())
    _check(start, rows, sa, sb, "start")

    def key(ws: WalkState):
        return (-ws.rank,) + (score(ws) if score else ())

    ws = WalkState(start)
    ws.reduce_all()
    cur_key = key(ws)
    best_key, best = cur_key, ws.masks()
    traj = [(0, ws.rank) + tuple(cur_key[1:])]
    since = 0
    steps = 0
    while steps < state.budget:
        if state.target_rank is not None and -best_key[0] <= state.target_rank and score is None:
            break
        mv = ws.random_flip(rng)
        if mv is None:
            if not ws.any_flip():
                break
            continue
        i, j, s = mv
        steps += 1
        since += 1
        if score is None:
            ws.apply_flip(i, j, s)
            for tid in (i, j):
                ws.reduce_around(tid)
            cur_key = key(ws)
        else:
            snapshot = ws.masks()
            ws.apply_flip(i, j, s)
            for tid in (i, j):
                ws.reduce_around(tid)
            new_key = key(ws)
            if new_key[0] == cur_key[0] and new_key < cur_key:
                ws = WalkState(snapshot)         # refuse structure losses at equal rank
            else:
                cur_key = new_key
        if cur_key > best_key:
            best_key, best = cur_key, ws.masks()
            traj.append((steps, ws.rank) + tuple(cur_key[1:]))
            since = 0
        if steps % SPOT_CHECK == 0:
            _check(ws.masks(), rows, sa, sb, f"step {steps}")
        if since >= state.plateau:
            ws = WalkState(start)
            ws.reduce_all()
            cur_key = key(ws)
            since = 0
    _check(best, rows, sa, sb, "end")
    result = from_masks(shape, best, dec.blocks)
    return SearchState(result, state.protected, state.objective, state.seed, state.budget,
                       state.plateau, state.target_rank, steps, traj)


def search_rank(state: SearchState) -> SearchState:
    """Random flip walk with greedy reductions and plateau restarts; keeps the best rank."""
    return _walk(state, None)


def structure_score(shape: Shape, protected: Sequence[RankOneTerm] = ()) -> Callable[[WalkState], tuple]:
    """Score = (selected groups, covered terms) under the coverage objective."""
    from ..structure import find_groups, select_disjoint

    extra = to_masks(Decomposition((shape,), Z2, tuple(protected)))

    def score(ws: WalkState) -> tuple:
        dec = from_masks(shape, ws.masks() + extra)
        sel = select_disjoint(find_groups(dec), "coverage")
        return (len(sel), sum(g.size for g in sel))

    return score


def search_structure(state: SearchState) -> SearchState:
    """Walk that never raises rank and never lowers structure at equal rank."""
    return _walk(state, structure_score(state.current.shape, state.protected))
