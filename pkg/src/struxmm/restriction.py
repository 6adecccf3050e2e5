"""Structured restrictions ``<n,m,p> <= (+) s_i (.) <n_i,m_i,p_i>``.

Restriction file format (plain text, ``#`` comments allowed)::

    shape 6 6 6
    kfold 1            # optional, left-hand multiplicity
    adds 691           # optional; or three numbers for the L1/L2/L3 phases
    117 1 1 1
    18 1 1 2

Block lines are ``s_i n_i m_i p_i``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .tensor import Shape

UNIT = Shape(1, 1, 1)


@dataclass(frozen=True)
class StructuredRestriction:
    base: Shape
    blocks: tuple[tuple[Shape, int], ...]
    kfold: int = 1
    adds: tuple[int, ...] | None = None
    provenance: tuple = field(default=(), compare=False)
    source: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        merged: Counter = Counter()
        order: list[Shape] = []
        for shape, s in self.blocks:
            shape = shape if isinstance(shape, Shape) else Shape(*shape)
            if s < 0:
                raise ValueError("block multiplicities must be nonnegative")
            if shape not in merged:
                order.append(shape)
            merged[shape] += s
        blocks = tuple(sorted(((sh, merged[sh]) for sh in order if merged[sh]),
                              key=lambda b: (b[0].volume, tuple(b[0]))))
        object.__setattr__(self, "blocks", blocks)
        if self.adds is not None:
            object.__setattr__(self, "adds", tuple(int(x) for x in self.adds))

    @classmethod
    def from_counts(cls, base: Shape | Sequence[int], blocks: Iterable, **kw) -> "StructuredRestriction":
        base = base if isinstance(base, Shape) else Shape(*base)
        return cls(base, tuple((sh if isinstance(sh, Shape) else Shape(*sh), s) for sh, s in blocks), **kw)

    @property
    def singletons(self) -> int:
        return dict(self.blocks).get(UNIT, 0)

    @property
    def term_count(self) -> int:
        return sum(s * sh.volume for sh, s in self.blocks)

    @property
    def total_adds(self) -> int | None:
        return None if self.adds is None else sum(self.adds)

    def rotate(self, times: int = 1) -> "StructuredRestriction":
        adds = self.adds
        if adds is not None and len(adds) == 3:
            t = times % 3
            adds = adds[t:] + adds[:t]
        return StructuredRestriction(self.base.rotate(times),
                                     tuple((sh.rotate(times), s) for sh, s in self.blocks),
                                     self.kfold, adds)

    def with_adds(self, adds) -> "StructuredRestriction":
        if isinstance(adds, int):
            adds = (adds,)
        return StructuredRestriction(self.base, self.blocks, self.kfold, tuple(adds),
                                     self.provenance, self.source)

    def __str__(self):
        parts = [f"{s}(.){sh}" for sh, s in self.blocks]
        lhs = f"{self.kfold}(.){self.base}" if self.kfold != 1 else str(self.base)
        return f"{lhs} <= " + " (+) ".join(parts)


def loads_restriction(text: str) -> StructuredRestriction:
    base = None
    kfold = 1
    adds = None
    blocks = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0].lower()
        if key == "shape":
            base = Shape(*(int(x) for x in tok[1:4]))
        elif key == "kfold":
            kfold = int(tok[1])
        elif key == "adds":
            adds = tuple(int(x) for x in tok[1:])
            if len(adds) not in (1, 3):
                raise ValueError("adds takes one total or three phase counts")
        else:
            vals = [int(x) for x in tok]
            if len(vals) != 4:
                raise ValueError(f"block line must be 's n m p', got {line!r}")
            blocks.append((Shape(*vals[1:]), vals[0]))
    if base is None:
        raise ValueError("restriction file needs a 'shape n m p' line")
    return StructuredRestriction(base, tuple(blocks), kfold, adds)


def dumps_restriction(res: StructuredRestriction) -> str:
    lines = [f"shape {res.base.n} {res.base.m} {res.base.p}"]
    if res.kfold != 1:
        lines.append(f"kfold {res.kfold}")
    if res.adds is not None:
        lines.append("adds " + " ".join(str(x) for x in res.adds))
    for sh, s in res.blocks:
        lines.append(f"{s} {sh.n} {sh.m} {sh.p}")
    return "\n".join(lines) + "\n"


def read_restriction(path: str | Path) -> StructuredRestriction:
    return loads_restriction(Path(path).read_text())


def write_restriction(res: StructuredRestriction, path: str | Path) -> None:
    Path(path).write_text(dumps_restriction(res))
