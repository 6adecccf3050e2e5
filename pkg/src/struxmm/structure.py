"""Detection of small matmul blocks inside a decomposition.

Two detectors are provided.  Shared-factor groups are terms with a common
factor (up to sign outside Z2), which form a copy of ``<1,1,k>`` or one of
its cyclic images.  Rectangle groups are four terms whose factors in two
slots take two values each in a 2x2 grid, which form a copy of a
permutation of ``<1,2,2>``.

Each group stores its block operands: for a block ``<bn,bm,bp>`` the dicts
``x[(u,v)]``, ``y[(v,w)]`` and ``z[(w,u)]`` hold coefficient vectors over the
entries of A, B and the c_ki-ordered C, with every sign already folded in, so
the group's terms sum to ``sum_{u,v,w} x[u,v] (x) y[v,w] (x) z[w,u]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .restriction import UNIT, StructuredRestriction
from .rings import Z2
from .tensor import Decomposition, RankOneTerm, Shape, sign_normal

EXACT_LIMIT = 40

Vec = tuple[int, ...]

_SHARED_SHAPES = {0: lambda k: Shape(1, 1, k), 1: lambda k: Shape(k, 1, 1), 2: lambda k: Shape(1, k, 1)}
_RECT_SHAPES = {(0, 2): Shape(1, 2, 2), (1, 2): Shape(2, 2, 1), (0, 1): Shape(2, 1, 2)}


class OverlapError(ValueError):
    pass


@dataclass(frozen=True)
class StructureGroup:
    term_indices: tuple[int, ...]
    block_shape: Shape
    shared_slots: tuple[str, ...]
    positions: tuple[tuple[int, int, int], ...] = ()
    x: dict = field(default_factory=dict, compare=False, repr=False)
    y: dict = field(default_factory=dict, compare=False, repr=False)
    z: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def size(self) -> int:
        return len(self.term_indices)

    @property
    def min_index(self) -> int:
        return min(self.term_indices)

    def overlaps(self, other: "StructureGroup") -> bool:
        return not set(self.term_indices).isdisjoint(other.term_indices)

    def rotate(self) -> "StructureGroup":
        """The same group seen in the cyclically permuted decomposition."""
        pos = tuple((v, w, u) for u, v, w in self.positions)
        slots = tuple({"a": "c", "b": "a", "c": "b"}[s] for s in self.shared_slots)
        return StructureGroup(self.term_indices, self.block_shape.rotate(), slots, pos,
                              dict(self.y), dict(self.z), dict(self.x))

    def block_terms(self) -> list[RankOneTerm]:
        """The group's terms rebuilt from the block operands."""
        bn, bm, bp = self.block_shape
        return [RankOneTerm(self.x[u, v], self.y[v, w], self.z[w, u])
                for u in range(bn) for v in range(bm) for w in range(bp)]


def singleton_group(dec: Decomposition, idx: int) -> StructureGroup:
    t = dec.terms[idx]
    return StructureGroup((idx,), UNIT, (), ((0, 0, 0),),
                          {(0, 0): t.a}, {(0, 0): t.b}, {(0, 0): t.c})


def _signed(ring, f: Vec, s: int) -> Vec:
    return f if s == 1 else tuple(ring.reduce(-x) for x in f)


def _key(dec: Decomposition, f: Vec) -> tuple[Vec, int]:
    # exact equality over Z2; up to sign otherwise
    if dec.ring == Z2:
        return tuple(f), 1
    return sign_normal(f)


def _live_terms(dec: Decomposition) -> list[int]:
    return [i for i, t in enumerate(dec.terms) if not t.is_zero()]


def find_shared_factor_groups(dec: Decomposition) -> list[StructureGroup]:
    """Every maximal set of at least two terms sharing one factor."""
    ring = dec.ring
    out = []
    for slot in range(3):
        buckets: dict[Vec, list[tuple[int, int]]] = {}
        for i in _live_terms(dec):
            key, s = _key(dec, dec.terms[i].factors()[slot])
            buckets.setdefault(key, []).append((i, s))
        for key, members in buckets.items():
            if len(members) < 2:
                continue
            k = len(members)
            shape = _SHARED_SHAPES[slot](k)
            x, y, z, pos = {}, {}, {}, []
            for j, (i, s) in enumerate(members):
                t = dec.terms[i]
                if slot == 0:      # a (x) b_w (x) c_w  ->  <1,1,k>
                    x[0, 0] = key
                    y[0, j] = _signed(ring, t.b, s)
                    z[j, 0] = t.c
                    pos.append((0, 0, j))
                elif slot == 1:    # a_u (x) b (x) c_u  ->  <k,1,1>
                    x[j, 0] = _signed(ring, t.a, s)
                    y[0, 0] = key
                    z[0, j] = t.c
                    pos.append((j, 0, 0))
                else:              # a_v (x) b_v (x) c  ->  <1,k,1>
                    x[0, j] = _signed(ring, t.a, s)
                    y[j, 0] = t.b
                    z[0, 0] = key
                    pos.append((0, j, 0))
            out.append(StructureGroup(tuple(i for i, _ in members), shape, ("abc"[slot],),
                                      tuple(pos), x, y, z))
    out.sort(key=lambda g: (g.term_indices, g.shared_slots))
    return out


def find_122_groups(dec: Decomposition) -> list[StructureGroup]:
    """Four-term 2x2 grids in two factor slots (copies of a permutation of ``<1,2,2>``)."""
    ring = dec.ring
    live = _live_terms(dec)
    out = []
    for (s1, s2), shape in _RECT_SHAPES.items():
        keys = {}
        for i in live:
            f = dec.terms[i].factors()
            k1, g1 = _key(dec, f[s1])
            k2, g2 = _key(dec, f[s2])
            keys[i] = (k1, k2, g1 * g2)
        # edges (alpha, gamma) -> terms, filtered by hashing
        edges: dict[tuple[Vec, Vec], list[int]] = {}
        nbrs: dict[Vec, set] = {}
        for i in live:
            k1, k2, _ = keys[i]
            edges.setdefault((k1, k2), []).append(i)
            nbrs.setdefault(k1, set()).add(k2)
        alphas = sorted(k for k, v in nbrs.items() if len(v) >= 2)
        seen = set()
        for a1, a2 in combinations(alphas, 2):
            common = sorted(nbrs[a1] & nbrs[a2])
            for g1, g2 in combinations(common, 2):
                pick = [[edges[a, g][0] for g in (g1, g2)] for a in (a1, a2)]
                idxs = tuple(sorted(i for row in pick for i in row))
                if len(set(idxs)) < 4 or (idxs, s1, s2) in seen:
                    continue
                seen.add((idxs, s1, s2))
                out.append(_rect_group(dec, ring, shape, (s1, s2), pick, (a1, a2), (g1, g2), keys))
    out.sort(key=lambda g: (g.term_indices, g.shared_slots))
    return out


def _rect_group(dec, ring, shape, slots, pick, alphas, gammas, keys) -> StructureGroup:
    s1, s2 = slots
    x, y, z, pos = {}, {}, {}, []
    members = []
    for j in range(2):
        for k in range(2):
            i = pick[j][k]
            t = dec.terms[i]
            sign = keys[i][2]
            members.append(i)
            if slots == (0, 2):    # <1,2,2>: a->x[0,v], c->z[w,0], b free
                x[0, j] = alphas[j]
                z[k, 0] = gammas[k]
                y[j, k] = _signed(ring, t.b, sign)
                pos.append((0, j, k))
            elif slots == (1, 2):  # <2,2,1>: b->y[v,0], c->z[0,u], a free
                y[j, 0] = alphas[j]
                z[0, k] = gammas[k]
                x[k, j] = _signed(ring, t.a, sign)
                pos.append((k, j, 0))
            else:                  # <2,1,2>: a->x[u,0], b->y[0,w], c free
                x[j, 0] = alphas[j]
                y[0, k] = gammas[k]
                z[k, j] = _signed(ring, t.c, sign)
                pos.append((j, 0, k))
    return StructureGroup(tuple(members), shape, ("abc"[s1], "abc"[s2]), tuple(pos), x, y, z)


def find_groups(dec: Decomposition) -> list[StructureGroup]:
    return find_shared_factor_groups(dec) + find_122_groups(dec)


def check_group(dec: Decomposition, g: StructureGroup) -> bool:
    """Oracle: the group's terms sum to the block tensor of its operands."""
    from .tensor import tensor_of

    sub = Decomposition(dec.blocks, dec.ring, tuple(dec.terms[i] for i in g.term_indices))
    blk = Decomposition(dec.blocks, dec.ring, tuple(g.block_terms()))
    return bool(np.array_equal(tensor_of(sub), tensor_of(blk)))


# ---------------------------------------------------------------------------
# disjoint selection
# ---------------------------------------------------------------------------

def _pack(groups: list[StructureGroup], weights: list[float], limit: int) -> list[int]:
    """Index set of a disjoint subfamily with maximum total weight."""
    order = sorted(range(len(groups)), key=lambda i: (groups[i].min_index, groups[i].term_indices))
    if len(groups) > limit:
        chosen, used = [], set()
        for i in sorted(order, key=lambda i: (-weights[i], groups[i].min_index,
                                              groups[i].term_indices)):
            if weights[i] > 0 and used.isdisjoint(groups[i].term_indices):
                chosen.append(i)
                used.update(groups[i].term_indices)
        return sorted(chosen)

    sets = [frozenset(groups[i].term_indices) for i in order]
    ws = [weights[i] for i in order]
    suffix = [0.0] * (len(ws) + 1)
    for j in range(len(ws) - 1, -1, -1):
        suffix[j] = suffix[j + 1] + max(ws[j], 0.0)
    best = [0.0, []]

    def rec(j, used, val, picked):
        if val > best[0] + 1e-12:
            best[0], best[1] = val, list(picked)
        if j == len(ws) or val + suffix[j] <= best[0] + 1e-12:
            return
        if ws[j] > 0 and used.isdisjoint(sets[j]):
            picked.append(j)
            rec(j + 1, used | sets[j], val + ws[j], picked)
            picked.pop()
        rec(j + 1, used, val, picked)

    rec(0, frozenset(), 0.0, [])
    return sorted(order[j] for j in best[1])


def _exponent_of(base: Shape, rank: int, groups) -> float:
    from .complexity import solve_exponent

    return solve_exponent(_restriction_from(base, rank, groups), bracket=(0.0, 6.0)).omega0


def _restriction_from(base: Shape, rank: int, groups) -> StructuredRestriction:
    covered = sum(g.size for g in groups)
    blocks = [(g.block_shape, 1) for g in groups] + [(UNIT, rank - covered)]
    return StructuredRestriction(base, tuple(blocks), provenance=tuple(groups))


def select_disjoint(groups, objective: str = "exponent", base: Shape | None = None,
                    rank: int | None = None, limit: int = EXACT_LIMIT) -> list[StructureGroup]:
    """Pairwise disjoint selection maximizing ``objective``.

    ``coverage`` maximizes the number of covered terms.  ``exponent``
    minimizes the exponent of the resulting restriction; it needs ``base``
    and ``rank`` and falls back to coverage when the rank alone already gives
    an exponent of 3 or more.  Otherwise it runs a Dinkelbach iteration in which every group weighs
    ``|g| - vol^(w/3)`` at the current exponent estimate ``w``.
    """
    groups = list(groups)
    if not groups:
        return []
    if objective == "coverage":
        sel = _pack(groups, [float(g.size) for g in groups], limit)
    elif objective == "exponent":
        if base is None or rank is None:
            raise ValueError("exponent objective needs base shape and rank")
        w = 3.0 * math.log(rank) / math.log(base.volume) if base.volume > 1 and rank > 1 else 3.0
        if w >= 3.0 - 1e-12:
            # no selection can push the exponent below 3; maximize coverage instead
            sel = _pack(groups, [float(g.size) for g in groups], limit)
        else:
            sel = None
            for _ in range(50):
                weights = [g.size - g.block_shape.volume ** (w / 3.0) for g in groups]
                new = _pack(groups, weights, limit)
                if new == sel:
                    break
                sel = new
                if not sel:
                    break
                w = _exponent_of(base, rank, [groups[i] for i in sel])
            sel = sel or []
    else:
        raise ValueError(f"unknown objective {objective!r}")
    chosen = [groups[i] for i in sel]
    for g, h in combinations(chosen, 2):
        assert not g.overlaps(h), "selection is not disjoint"
    return chosen


def to_restriction(dec: Decomposition, selection) -> StructuredRestriction:
    used: set[int] = set()
    for g in selection:
        if not used.isdisjoint(g.term_indices):
            raise OverlapError(f"group {g.term_indices} overlaps an earlier group")
        used.update(g.term_indices)
    res = _restriction_from(dec.shape, dec.rank, list(selection))
    return StructuredRestriction(res.base, res.blocks, provenance=tuple(selection), source=dec)


def structure_indicator(res: StructuredRestriction) -> str:
    """``"1^u 2^v 3^w 4^x"`` with classes by block volume, zero exponents omitted."""
    counts: dict[int, int] = {}
    for sh, s in res.blocks:
        counts[sh.volume] = counts.get(sh.volume, 0) + s
    parts = []
    for vol in sorted(counts):
        s = counts[vol]
        tag = str(vol) if vol <= 4 else f"vol={vol}"
        parts.append(tag if s == 1 else f"{tag}^{s}")
    return " ".join(parts)


def analyze(dec: Decomposition, objective: str = "exponent", limit: int = EXACT_LIMIT):
    """Detect, select and summarize; returns ``(restriction, selection, candidates)``."""
    cands = find_groups(dec)
    sel = select_disjoint(cands, objective, dec.shape, dec.rank, limit)
    return to_restriction(dec, sel), sel, cands


def block_list(dec: Decomposition, selection) -> list[StructureGroup]:
    """Selected groups followed by singletons for every uncovered live term."""
    used = {i for g in selection for i in g.term_indices}
    out = list(selection)
    for i, t in enumerate(dec.terms):
        if i not in used and not t.is_zero():
            out.append(singleton_group(dec, i))
    return out
