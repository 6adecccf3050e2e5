"""Recursive exact matrix multiplication driven by a structured restriction.

A compiled :class:`OrientedPlan` holds three straight-line programs.  L1 maps
the ``n x m`` grid of A-blocks to every left block operand, L2 does the same
for B, and L3 maps the block products to the ``n x p`` grid of C-blocks.
Each selected group becomes one recursive call on operands assembled from its
``bn x bm`` and ``bm x bp`` grids, so a ``<1,1,2>`` group multiplies one
combined A-operand by a horizontally concatenated pair of B-operands.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from . import policy
from .additions import LinearProgram, compile_rows
from .restriction import StructuredRestriction
from .structure import StructureGroup, analyze, block_list
from .tensor import Decomposition, DimensionError, Shape, cyclic_permute

_INT64_LIMIT = 1 << 62


class PlanError(ValueError):
    pass


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatrixBuffer:
    """Dense exact-integer matrix (row-major, object dtype)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.ndim != 2:
            raise DimensionError("MatrixBuffer holds a 2-d array")
        object.__setattr__(self, "entries", _as_object(arr))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other):
        other = other.entries if isinstance(other, MatrixBuffer) else np.asarray(other)
        return self.entries.shape == other.shape and bool((self.entries == other).all())

    def tolist(self):
        return [[int(x) for x in row] for row in self.entries]


def _as_object(arr) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.dtype == object:
        return arr
    if arr.dtype.kind not in "iub":
        raise TypeError(f"exact integer matrices only, got dtype {arr.dtype}")
    return np.array([[int(x) for x in row] for row in arr], dtype=object).reshape(arr.shape)


def _array(x) -> np.ndarray:
    return x.entries if isinstance(x, MatrixBuffer) else np.asarray(x)


def _max_abs(arr: np.ndarray) -> int:
    return max((abs(int(v)) for v in arr.flat), default=0)


def standard_multiply(A, B) -> MatrixBuffer:
    """Schoolbook triple loop over Python ints."""
    A, B = _array(A), _array(B)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    N, M = A.shape
    P = B.shape[1]
    out = np.empty((N, P), dtype=object)
    for i in range(N):
        row = [int(x) for x in A[i]]
        for k in range(P):
            out[i, k] = sum(row[j] * int(B[j, k]) for j in range(M))
    return MatrixBuffer(out)


# ---------------------------------------------------------------------------
# compiled plans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockCall:
    shape: Shape
    x_index: dict       # (u, v) -> L1 output
    y_index: dict       # (v, w) -> L2 output
    z_offset: int       # first L3 input of this call; entries (u, w) row-major


@dataclass(frozen=True)
class OrientedPlan:
    base: Shape
    calls: tuple[BlockCall, ...]
    l1: LinearProgram
    l2: LinearProgram
    l3: LinearProgram

    @property
    def block_shapes(self) -> tuple[Shape, ...]:
        return tuple(c.shape for c in self.calls)

    @property
    def phase_adds(self) -> tuple[int, int, int]:
        return self.l1.cost, self.l2.cost, self.l3.cost

    @property
    def total_adds(self) -> int:
        return sum(self.phase_adds)

    @cached_property
    def max_growth(self) -> int:
        """Upper bound on the entry growth of one level (for dtype choice)."""
        def norm(prog):
            return max((sum(abs(x) for x in r) for r in prog.value_rows()), default=1)
        return norm(self.l1) * norm(self.l2) * norm(self.l3)


def compile_orientation(dec: Decomposition, blocks: list[StructureGroup]) -> OrientedPlan:
    n, m, p = dec.dims
    x_rows, y_rows, calls = [], [], []
    z_entries = []      # (block, u, w)
    for b, g in enumerate(blocks):
        bn, bm, bp = g.block_shape
        xi, yi = {}, {}
        for (u, v), vec in sorted(g.x.items()):
            xi[u, v] = len(x_rows)
            x_rows.append(list(vec))
        for (v, w), vec in sorted(g.y.items()):
            yi[v, w] = len(y_rows)
            y_rows.append(list(vec))
        calls.append(BlockCall(g.block_shape, xi, yi, len(z_entries)))
        z_entries.extend((b, u, w) for u in range(bn) for w in range(bp))
    l3_rows = []
    for i in range(n):
        for k in range(p):
            l3_rows.append([int(blocks[b].z[w, u][k * n + i]) for b, u, w in z_entries])
    progs = []
    for rows, size in ((x_rows, n * m), (y_rows, m * p), (l3_rows, len(z_entries))):
        prog = compile_rows(rows, size)
        if prog.replay_rows() != [list(r) for r in rows]:
            raise PlanError("linear program replay mismatch")
        progs.append(prog)
    plan = OrientedPlan(dec.shape, tuple(calls), *progs)
    if not self_check(plan):
        raise PlanError(f"compiled plan for {dec.shape} fails the elementary-matrix probe")
    return plan


def self_check(plan: OrientedPlan) -> bool:
    """Probe with every pair of elementary matrices ``E_ij``, ``E_jk``.

    All ``nm * mp`` probes run at once: each scalar block value is a vector
    over probes, so the plan reproduces the matrix multiplication tensor
    coordinates iff the final C values are the expected indicator vectors.
    """
    n, m, p = plan.base
    na, nb = n * m, m * p
    ia, ib = np.divmod(np.arange(na * nb), nb)
    a_in = [(ia == s).astype(np.int64) for s in range(na)]
    b_in = [(ib == s).astype(np.int64) for s in range(nb)]
    zero = np.zeros(na * nb, dtype=np.int64)
    X = plan.l1.evaluate(a_in, zero)
    Y = plan.l2.evaluate(b_in, zero)
    Z = []
    for call in plan.calls:
        bn, bm, bp = call.shape
        for u in range(bn):
            for w in range(bp):
                Z.append(sum(X[call.x_index[u, v]] * Y[call.y_index[v, w]] for v in range(bm)))
    C = plan.l3.evaluate(Z, zero)
    ai, aj = np.divmod(ia, m)
    bj, bk = np.divmod(ib, p)
    for i in range(n):
        for k in range(p):
            expect = ((ai == i) & (bk == k) & (aj == bj)).astype(np.int64)
            if not np.array_equal(C[i * p + k], expect):
                return False
    return True


@dataclass(frozen=True)
class ExecutionPlan:
    schedule: tuple[OrientedPlan, ...]
    n0: int
    restriction: StructuredRestriction | None = field(default=None, compare=False)
    name: str = "plan"

    @property
    def base(self) -> Shape:
        return self.schedule[0].base

    def levels(self) -> tuple[policy.Level, ...]:
        return policy.normalize_levels([policy.Level(self.n0 + 1, self.schedule, self.name)])


def compile_plan(dec: Decomposition, selection=None, n0: int | None = None,
                 alternate: bool | None = None, objective: str = "exponent",
                 name: str = "plan") -> ExecutionPlan:
    """Compile ``dec`` with its selected groups (detected when ``selection`` is None).

    ``alternate`` cycles the three cyclic images by recursion depth; by
    default it is on exactly when the base shape is square and some selected
    block is not.
    """
    if dec.is_direct_sum:
        raise PlanError("plans need a plain matmul decomposition")
    if selection is None:
        res, selection, _ = analyze(dec, objective)
    else:
        from .structure import to_restriction
        res = to_restriction(dec, selection)
    blocks = block_list(dec, selection)
    if alternate is None:
        alternate = dec.shape.is_square() and any(not g.block_shape.is_square() for g in blocks)
    if alternate and not dec.shape.is_square():
        raise PlanError("alternation needs a square base shape")
    schedule = [compile_orientation(dec, blocks)]
    if alternate:
        d, bl = dec, blocks
        for _ in range(2):
            d = cyclic_permute(d)
            bl = [g.rotate() for g in bl]
            schedule.append(compile_orientation(d, bl))
    if n0 is None:
        n0 = 4 * max(dec.shape)
    plan0 = schedule[0]
    res = res.with_adds(plan0.phase_adds)
    return ExecutionPlan(tuple(schedule), n0, res, name)


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

@dataclass
class Counters:
    mults: int = 0
    adds: int = 0
    max_depth: int = 0

    @property
    def total(self) -> int:
        return self.mults + self.adds


def _levels_of(plan) -> tuple[policy.Level, ...]:
    if isinstance(plan, ExecutionPlan):
        return plan.levels()
    return policy.normalize_levels(plan)


def _growth_bound(levels, N, M, P, split_ratio) -> int:
    """Factor bounding |entries| of every intermediate relative to max|A| max|B|."""

    @lru_cache(maxsize=None)
    def rec(N, M, P, depth):
        step = policy.decide(levels, N, M, P, depth, split_ratio)
        if step.kind == "standard":
            return M
        if step.kind == "split":
            D = step.tile
            _, rem, _ = policy.split_pieces(N, M, P, D)
            return (M // D) * rec(D, D, D, depth) + sum(rec(*r, depth) for r in rem)
        g = step.orientation.max_growth
        return g * max(rec(*kid, depth + 1) for kid in step.children)

    return rec(N, M, P, 0)


def multiply(A, B, plan, counters: Counters | None = None,
             split_ratio: int | None = policy.SPLIT_RATIO) -> MatrixBuffer:
    """Exact ``A @ B`` by Algorithm-1 recursion under ``plan``.

    ``plan`` is an :class:`ExecutionPlan` or a sequence of profile levels.
    Operation counts accumulate into ``counters`` if given.
    """
    A, B = _array(A), _array(B)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    levels = _levels_of(plan)
    for lv in levels:
        for o in lv.schedule or ():
            if not isinstance(o, OrientedPlan):
                raise PlanError(f"level {lv.name!r} has no compiled programs")
    N, M = A.shape
    P = B.shape[1]
    counters = counters if counters is not None else Counters()
    bound = _max_abs(A) * _max_abs(B) * _growth_bound(levels, N, M, P, split_ratio)
    dtype = np.int64 if bound < _INT64_LIMIT else object
    Aw = A.astype(dtype) if dtype is np.int64 else _as_object(A)
    Bw = B.astype(dtype) if dtype is np.int64 else _as_object(B)
    C = _Runner(levels, counters, split_ratio, dtype).run(Aw, Bw, 0)
    return MatrixBuffer(C)


class _Runner:
    def __init__(self, levels, counters, split_ratio, dtype):
        self.levels = levels
        self.c = counters
        self.split_ratio = split_ratio
        self.dtype = dtype

    def leaf(self, A, B):
        mu, ad = policy.standard_cost(A.shape[0], A.shape[1], B.shape[1])
        self.c.mults += mu
        self.c.adds += ad
        return A @ B

    def run(self, A, B, depth):
        N, M = A.shape
        P = B.shape[1]
        self.c.max_depth = max(self.c.max_depth, depth)
        step = policy.decide(self.levels, N, M, P, depth, self.split_ratio)
        if step.kind == "standard":
            return self.leaf(A, B)
        if step.kind == "split":
            return self.split(A, B, step.tile, depth)
        return self.recurse(A, B, step, depth)

    def split(self, A, B, D, depth):
        N, M = A.shape
        P = B.shape[1]
        tiles, _, acc = policy.split_pieces(N, M, P, D)
        qN, qM, qP = N // D, M // D, P // D
        C = np.zeros((N, P), dtype=self.dtype)
        for i in range(qN):
            for k in range(qP):
                blk = None
                for j in range(qM):
                    prod = self.run(A[i * D:(i + 1) * D, j * D:(j + 1) * D],
                                    B[j * D:(j + 1) * D, k * D:(k + 1) * D], depth)
                    blk = prod if blk is None else blk + prod
                C[i * D:(i + 1) * D, k * D:(k + 1) * D] = blk
        if qM * D < M:
            C[:qN * D, :qP * D] += self.run(A[:qN * D, qM * D:], B[qM * D:, :qP * D], depth)
        if qN * D < N:
            C[qN * D:, :] = self.run(A[qN * D:, :], B, depth)
        if qP * D < P:
            C[:qN * D, qP * D:] = self.run(A[:qN * D, :], B[:, qP * D:], depth)
        self.c.adds += acc
        return C

    def recurse(self, A, B, step, depth):
        plan: OrientedPlan = step.orientation
        n, m, p = plan.base
        N, M = A.shape
        P = B.shape[1]
        Np, Mp, Pp = step.padded
        if (Np, Mp) != (N, M):
            A2 = np.zeros((Np, Mp), dtype=self.dtype)
            A2[:N, :M] = A
            A = A2
        if (Mp, Pp) != (M, P):
            B2 = np.zeros((Mp, Pp), dtype=self.dtype)
            B2[:M, :P] = B
            B = B2
        rn, rm, rp = Np // n, Mp // m, Pp // p
        a_blocks = [A[i * rn:(i + 1) * rn, j * rm:(j + 1) * rm] for i in range(n) for j in range(m)]
        b_blocks = [B[j * rm:(j + 1) * rm, k * rp:(k + 1) * rp] for j in range(m) for k in range(p)]
        X = plan.l1.evaluate(a_blocks)
        Y = plan.l2.evaluate(b_blocks)
        self.c.adds += policy.linear_cost(plan, Np, Mp, Pp)
        Z = []
        for call in plan.calls:
            bn, bm, bp = call.shape
            left = X[call.x_index[0, 0]] if (bn, bm) == (1, 1) else self.assemble(
                [[X[call.x_index[u, v]] for v in range(bm)] for u in range(bn)], rn, rm)
            right = Y[call.y_index[0, 0]] if (bm, bp) == (1, 1) else self.assemble(
                [[Y[call.y_index[v, w]] for w in range(bp)] for v in range(bm)], rm, rp)
            prod = self.run(left, right, depth + 1)
            for u in range(bn):
                for w in range(bp):
                    Z.append(prod[u * rn:(u + 1) * rn, w * rp:(w + 1) * rp])
        zero = np.zeros((rn, rp), dtype=self.dtype)
        Cb = plan.l3.evaluate(Z, zero)
        C = self.assemble([[Cb[i * p + k] for k in range(p)] for i in range(n)], rn, rp)
        return C[:N, :P]

    def assemble(self, grid, r, c):
        out = np.empty((len(grid) * r, len(grid[0]) * c), dtype=self.dtype)
        for i, row in enumerate(grid):
            for j, blk in enumerate(row):
                out[i * r:(i + 1) * r, j * c:(j + 1) * c] = blk
        return out
