"""Addition counting by greedy common-subexpression elimination.

Each linear phase of a bilinear algorithm is a list of rows, every row a
linear combination of operands.  :func:`compile_rows` turns such a list into a
straight-line :class:`LinearProgram` of binary additions/subtractions and
scalings.  Negation is free (it folds into the consumer); scaling by a
coefficient other than +-1 costs one operation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .tensor import Decomposition


@dataclass(frozen=True)
class Instruction:
    """``dst = c0 * src0`` (scale) or ``dst = src0 + sign * src1`` (add)."""

    kind: str
    src: tuple[int, ...]
    coef: int


@dataclass(frozen=True)
class LinearProgram:
    n_inputs: int
    instructions: tuple[Instruction, ...]
    outputs: tuple[tuple[int, int] | None, ...]

    @property
    def cost(self) -> int:
        return len(self.instructions)

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    def evaluate(self, inputs: Sequence, zero=0):
        """Run the program; works on ints, numpy arrays, or coefficient vectors."""
        vals = list(inputs)
        if len(vals) != self.n_inputs:
            raise ValueError(f"program expects {self.n_inputs} inputs, got {len(vals)}")
        for ins in self.instructions:
            if ins.kind == "scale":
                vals.append(vals[ins.src[0]] * ins.coef)
            elif ins.coef > 0:
                vals.append(vals[ins.src[0]] + vals[ins.src[1]])
            else:
                vals.append(vals[ins.src[0]] - vals[ins.src[1]])
        out = []
        for o in self.outputs:
            if o is None:
                out.append(zero)
            else:
                idx, sign = o
                out.append(vals[idx] if sign > 0 else -vals[idx])
        return out

    def value_rows(self) -> list[list[int]]:
        """Coefficient vectors of every input and intermediate value."""
        n = self.n_inputs
        vals = [[1 if i == j else 0 for i in range(n)] for j in range(n)]
        for ins in self.instructions:
            if ins.kind == "scale":
                vals.append([x * ins.coef for x in vals[ins.src[0]]])
            else:
                s = ins.coef
                vals.append([x + s * y for x, y in zip(vals[ins.src[0]], vals[ins.src[1]])])
        return vals

    def replay_rows(self) -> list[list[int]]:
        """Coefficient vectors of every output, computed by running the program."""
        n = self.n_inputs
        vals = self.value_rows()
        rows = []
        for o in self.outputs:
            if o is None:
                rows.append([0] * n)
            else:
                idx, sign = o
                rows.append([sign * x for x in vals[idx]])
        return rows


def compile_rows(rows: Sequence[Sequence[int]], n_inputs: int | None = None,
                 cse: bool = True) -> LinearProgram:
    """Greedy CSE: repeatedly factor out the signed operand pair shared by most rows."""
    rows = [list(r) for r in rows]
    if n_inputs is None:
        n_inputs = len(rows[0]) if rows else 0
    instructions: list[Instruction] = []
    next_id = n_inputs

    def new(ins: Instruction) -> int:
        nonlocal next_id
        instructions.append(ins)
        next_id += 1
        return next_id - 1

    # scaled operands, shared between rows
    scaled: dict[tuple[int, int], int] = {}
    work: list[dict[int, int]] = []
    for r in rows:
        d: dict[int, int] = {}
        for idx, c in enumerate(r):
            if c == 0:
                continue
            if abs(c) != 1:
                key = (idx, abs(c))
                if key not in scaled:
                    scaled[key] = new(Instruction("scale", (idx,), abs(c)))
                d[scaled[key]] = 1 if c > 0 else -1
            else:
                d[idx] = c
        work.append(d)

    # identical rows (up to sign) are computed once
    canon: dict[tuple, int] = {}
    rep_of: list[tuple[int, int]] = []
    uniq: list[dict[int, int]] = []
    for d in work:
        items = tuple(sorted(d.items()))
        if not items:
            rep_of.append((-1, 0))
            continue
        s = items[0][1]
        key = tuple((k, v * s) for k, v in items)
        if key not in canon:
            canon[key] = len(uniq)
            uniq.append(dict(key))
        rep_of.append((canon[key], s))

    while cse:
        counts: Counter = Counter()
        for d in uniq:
            keys = sorted(d)
            for x in range(len(keys)):
                kx = keys[x]
                for y in range(x + 1, len(keys)):
                    ky = keys[y]
                    counts[(kx, ky, d[kx] * d[ky])] += 1
        if not counts:
            break
        best = max(counts.values())
        if best < 2:
            break
        kx, ky, rel = min(k for k, v in counts.items() if v == best)
        t = new(Instruction("add", (kx, ky), rel))
        for d in uniq:
            if kx in d and ky in d and d[kx] * d[ky] == rel:
                s = d.pop(kx)
                del d[ky]
                d[t] = s

    # chain the remaining terms of every row
    final: list[tuple[int, int]] = []
    for d in uniq:
        items = sorted(d.items())
        acc, acc_sign = items[0]
        for k, s in items[1:]:
            acc = new(Instruction("add", (acc, k), acc_sign * s))
        final.append((acc, acc_sign))
    outputs = []
    for ui, s in rep_of:
        if ui < 0:
            outputs.append(None)
        else:
            idx, sign = final[ui]
            outputs.append((idx, sign * s))
    return LinearProgram(n_inputs, tuple(instructions), tuple(outputs))


def phase_rows(dec: Decomposition) -> tuple[list[list[int]], list[list[int]], list[list[int]]]:
    """L1/L2 rows (one per term) and L3 rows (one per output entry C[i,k])."""
    n, m, p = dec.dims
    l1 = [list(t.a) for t in dec.terms]
    l2 = [list(t.b) for t in dec.terms]
    l3 = [[t.c[k * n + i] for t in dec.terms] for i in range(n) for k in range(p)]
    return l1, l2, l3


@dataclass(frozen=True)
class AdditionCount:
    A: int
    phases: tuple[LinearProgram, LinearProgram, LinearProgram]

    @property
    def per_phase(self) -> tuple[int, int, int]:
        return tuple(pr.cost for pr in self.phases)


def count_additions(dec: Decomposition, cse: bool = True) -> AdditionCount:
    """Additions and scalings needed by the three linear phases of ``dec``.

    The result carries the emitted programs; replaying them reproduces every
    phase row exactly (checked here).
    """
    rows = phase_rows(dec)
    sizes = (dec.factor_sizes[0], dec.factor_sizes[1], dec.rank)
    progs = tuple(compile_rows(r, n, cse=cse) for r, n in zip(rows, sizes))
    for pr, r in zip(progs, rows):
        if pr.replay_rows() != [list(x) for x in r]:
            raise AssertionError("linear program does not reproduce its rows")
    return AdditionCount(sum(pr.cost for pr in progs), progs)
