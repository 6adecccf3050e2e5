"""Recursion decisions shared by the executor and the simulator.

Both walk the same tree of subproblems; keeping every decision here (which
level applies, padding, stall splitting, cost of linear phases and leaves)
is what makes executor counters and simulated counts agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from .restriction import StructuredRestriction
from .tensor import Shape

SPLIT_RATIO = 4


class Orientation(Protocol):
    base: Shape
    block_shapes: tuple[Shape, ...]
    phase_adds: tuple[int, int, int] | None
    total_adds: int


def linear_cost(orient: Orientation, Np: int, Mp: int, Pp: int) -> int:
    """Operations of the three linear phases on padded ``Np x Mp x Pp`` inputs."""
    n, m, p = orient.base
    a = (Np // n) * (Mp // m)
    b = (Mp // m) * (Pp // p)
    c = (Np // n) * (Pp // p)
    if orient.phase_adds is not None:
        l1, l2, l3 = orient.phase_adds
        return l1 * a + l2 * b + l3 * c
    # aggregate count only: spread evenly over the three phases (exact when square)
    return -(-orient.total_adds * (a + b + c) // 3)


def standard_cost(a: int, b: int, c: int) -> tuple[int, int]:
    """(mults, adds) of the schoolbook product of ``a x b`` by ``b x c``."""
    return a * b * c, a * (b - 1) * c


@dataclass(frozen=True)
class RestrictionOrientation:
    """A schedule entry known only through its restriction (no programs)."""

    base: Shape
    block_shapes: tuple[Shape, ...]
    phase_adds: tuple[int, int, int] | None
    total_adds: int

    @classmethod
    def from_restriction(cls, res: StructuredRestriction, adds: int | None = None):
        shapes = tuple(sh for sh, s in res.blocks for _ in range(s))
        phase = res.adds if res.adds is not None and len(res.adds) == 3 and adds is None else None
        total = adds if adds is not None else res.total_adds
        if total is None:
            raise ValueError("restriction has no addition count")
        return cls(res.base, shapes, phase, int(total))


@dataclass(frozen=True)
class Level:
    """One algorithm of a profile; applies when ``min(N, M, P) >= cutover``."""

    cutover: int
    schedule: tuple | None      # None = standard algorithm
    name: str = ""

    @property
    def is_standard(self) -> bool:
        return self.schedule is None


STANDARD_LEVEL = Level(1, None, "standard")


def schedule_for(res: StructuredRestriction, alternate: bool | None = None) -> tuple[StructuredRestriction, ...]:
    """The restriction and (optionally) its two cyclic images."""
    if alternate is None:
        alternate = res.base.is_square() and any(not sh.is_square() for sh, _ in res.blocks)
    if alternate and not res.base.is_square():
        raise ValueError("alternation needs a square base shape")
    return (res, res.rotate(1), res.rotate(2)) if alternate else (res,)


@dataclass(frozen=True)
class Step:
    kind: str                                 # standard | split | recurse
    orientation: object = None
    padded: tuple[int, int, int] = (0, 0, 0)
    children: tuple[tuple[int, int, int], ...] = ()
    tile: int = 0


def normalize_levels(levels: Sequence[Level]) -> tuple[Level, ...]:
    levels = tuple(sorted(levels, key=lambda lv: -lv.cutover))
    cuts = [lv.cutover for lv in levels]
    if len(set(cuts)) != len(cuts):
        raise ValueError("profile cutovers must be strictly decreasing")
    if not levels or not levels[-1].is_standard:
        levels = levels + (STANDARD_LEVEL,)
    for lv in levels:
        if lv.schedule is not None and len(lv.schedule) not in (1, 3):
            raise ValueError("schedules hold one restriction or all three cyclic images")
    return levels


def decide(levels: tuple[Level, ...], N: int, M: int, P: int, depth: int,
           split_ratio: int | None = SPLIT_RATIO) -> Step:
    lo = min(N, M, P)
    level = next((lv for lv in levels if lo >= lv.cutover), levels[-1])
    if level.is_standard:
        return Step("standard")
    if split_ratio and max(N, M, P) >= split_ratio * lo:
        return Step("split", tile=lo)
    orient = level.schedule[depth % len(level.schedule)]
    n, m, p = orient.base
    Np, Mp, Pp = -(-N // n) * n, -(-M // m) * m, -(-P // p) * p
    kids = tuple((Np // n * s.n, Mp // m * s.m, Pp // p * s.p) for s in orient.block_shapes)
    vol = N * M * P
    if any(a * b * c >= vol for a, b, c in kids):
        return Step("standard")     # recursion would not shrink the problem
    return Step("recurse", orient, (Np, Mp, Pp), kids)


def split_pieces(N: int, M: int, P: int, D: int):
    """Square ``D``-tiles plus remainder strips for a stalled rectangular shape.

    Returns ``(tiles, remainders, accumulate_adds)`` where ``tiles`` is the
    number of ``D x D x D`` recursive calls and ``remainders`` lists the
    ``(a, b, c)`` strips, which go back through :func:`decide` (small ones end
    up with the standard algorithm).  Every piece is strictly smaller than
    the input, so the recursion terminates.
    """
    qN, qM, qP = N // D, M // D, P // D
    rN, rM, rP = N - qN * D, M - qM * D, P - qP * D
    tiles = qN * qM * qP
    rem = []
    if rM:
        rem.append((qN * D, rM, qP * D))
    if rN:
        rem.append((rN, M, P))
    if rP:
        rem.append((qN * D, M, rP))
    acc = qN * qP * ((qM - 1) + (1 if rM else 0)) * D * D
    return tiles, rem, acc
