"""Operation-count model of the recursive algorithm and its baselines.

A profile is a stack of algorithms with size cutovers.  The count follows
the executor's recursion exactly (same :mod:`struxmm.policy` decisions) but
walks shapes only, memoized on the subproblem shape, so sizes up to 10^12
take milliseconds.

Profile file lines are ``cutover algorithm restriction-file A``::

    10000 restriction r666.txt 691
    35    winograd    -            -
    1     standard    -            -

``algorithm`` is ``standard``, ``restriction`` (block list and adds from the
restriction file) or a decomposition (a catalog name or a file path), which
is compiled into a plan whose true per-phase counts are used.  ``A``
overrides the addition count (``-`` keeps the plan's or the file's).
"""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import policy
from .restriction import StructuredRestriction, read_restriction
from .policy import Level, RestrictionOrientation

sys.setrecursionlimit(max(sys.getrecursionlimit(), 10_000))


@dataclass(frozen=True)
class CostReport:
    N: int
    M: int
    P: int
    mults: int
    adds: int

    @property
    def total(self) -> int:
        return self.mults + self.adds


@dataclass
class SimProfile:
    name: str
    levels: tuple[Level, ...]
    split_ratio: int | None = policy.SPLIT_RATIO
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.levels = policy.normalize_levels(self.levels)


def _rec(prof: SimProfile, N: int, M: int, P: int, depth: int) -> tuple[int, int]:
    key = (N, M, P, depth % 3)
    hit = prof._memo.get(key)
    if hit is not None:
        return hit
    step = policy.decide(prof.levels, N, M, P, depth, prof.split_ratio)
    if step.kind == "standard":
        out = policy.standard_cost(N, M, P)
    elif step.kind == "split":
        D = step.tile
        tiles, rem, acc = policy.split_pieces(N, M, P, D)
        tm, ta = _rec(prof, D, D, D, depth)
        mu, ad = tiles * tm, tiles * ta + acc
        for a, b, c in rem:
            x, y = _rec(prof, a, b, c, depth)
            mu, ad = mu + x, ad + y
        out = (mu, ad)
    else:
        mu = 0
        ad = policy.linear_cost(step.orientation, *step.padded)
        for kid in step.children:
            x, y = _rec(prof, *kid, depth + 1)
            mu, ad = mu + x, ad + y
        out = (mu, ad)
    prof._memo[key] = out
    return out


def simulate(N: int, M: int | None = None, P: int | None = None,
             profile: SimProfile | None = None) -> CostReport:
    M = N if M is None else M
    P = N if P is None else P
    if min(N, M, P) < 1:
        raise ValueError("dimensions must be positive")
    profile = profile or standard_profile()
    mu, ad = _rec(profile, N, M, P, 0)
    return CostReport(N, M, P, mu, ad)


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

def standard_profile() -> SimProfile:
    return SimProfile("standard", (policy.STANDARD_LEVEL,))


def _plan_schedule(dec, n0=None):
    from .executor import compile_plan

    return compile_plan(dec, n0=n0).schedule


def decomposition_profile(name: str, dec, cutover: int, below: Sequence[Level] = ()) -> SimProfile:
    """``dec``'s compiled plan for ``min(N,M,P) >= cutover``, then ``below`` levels."""
    return SimProfile(name, (Level(cutover, _plan_schedule(dec), name), *below))


def strassen_profile(cutover: int = 2) -> SimProfile:
    from . import catalog

    return decomposition_profile("strassen", catalog.strassen(), cutover)


def winograd_profile(cutover: int = 35) -> SimProfile:
    from . import catalog

    return decomposition_profile("winograd", catalog.winograd(), cutover)


def restriction_level(res: StructuredRestriction, cutover: int, adds: int | None = None,
                      name: str = "restriction") -> Level:
    sched = tuple(RestrictionOrientation.from_restriction(r, adds) for r in policy.schedule_for(res))
    return Level(cutover, sched, name)


def structured_profile(res: StructuredRestriction, cutover: int = 10_000,
                       winograd_cutover: int = 35, adds: int | None = None,
                       name: str = "structured") -> SimProfile:
    """The restriction above ``cutover``, Winograd down to ``winograd_cutover``, then standard."""
    from . import catalog

    return SimProfile(name, (restriction_level(res, cutover, adds, name),
                             Level(winograd_cutover, _plan_schedule(catalog.winograd()), "winograd")))


def loads_profile(text: str, base_dir: Path | None = None, name: str = "profile") -> SimProfile:
    from . import catalog

    base_dir = Path(base_dir) if base_dir else Path.cwd()
    levels = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 4:
            raise ValueError(f"profile line must be 'cutover algorithm restriction-file A': {line!r}")
        cut, algo, rfile, adds = tok
        cut = int(float(cut))
        adds = None if adds == "-" else int(adds)
        res = None
        if rfile != "-":
            path = Path(rfile)
            res = read_restriction(path if path.is_absolute() else base_dir / path)
        if algo == "standard":
            levels.append(Level(cut, None, "standard"))
        elif algo == "restriction":
            if res is None:
                raise ValueError("'restriction' levels need a restriction file")
            levels.append(restriction_level(res, cut, adds, res_name(rfile)))
        else:
            path = Path(algo)
            if not path.is_absolute() and (base_dir / path).exists():
                path = base_dir / path
            if path.exists():
                from .io import read_decomposition
                dec = read_decomposition(path)
            else:
                dec = catalog.load(algo)
            sched = _plan_schedule(dec)
            if res is not None and sched and res.blocks != _blocks_of(sched[0]):
                raise ValueError(f"{rfile} does not describe the structure of {algo}")
            if adds is not None:
                sched = tuple(RestrictionOrientation(o.base, o.block_shapes, None, adds) for o in sched)
            levels.append(Level(cut, sched, Path(algo).stem))
    return SimProfile(name, tuple(levels))


def res_name(rfile: str) -> str:
    return Path(rfile).stem


def _blocks_of(orient) -> tuple:
    return StructuredRestriction(orient.base, tuple((s, 1) for s in orient.block_shapes)).blocks


def read_profile(path: str | Path) -> SimProfile:
    path = Path(path)
    return loads_profile(path.read_text(), path.parent, path.stem)


# ---------------------------------------------------------------------------
# sweeps and crossovers
# ---------------------------------------------------------------------------

def log_grid(nmin: int, nmax: int, per_decade: int) -> list[int]:
    if nmin < 1 or nmax < nmin:
        raise ValueError("need 1 <= Nmin <= Nmax")
    lo, hi = math.log10(nmin), math.log10(nmax)
    steps = max(1, round((hi - lo) * per_decade))
    pts = sorted({max(nmin, min(nmax, round(10 ** (lo + i * (hi - lo) / steps))))
                  for i in range(steps + 1)})
    return pts


@dataclass(frozen=True)
class SweepRow:
    N: int
    profile: str
    mults: int
    adds: int
    total: int
    normalized: float


def sweep(profiles: Iterable[SimProfile], nmin: int, nmax: int, per_decade: int = 10,
          omega: float = math.log2(7)) -> list[SweepRow]:
    rows = []
    grid = log_grid(nmin, nmax, per_decade)
    for prof in profiles:
        for N in grid:
            r = simulate(N, profile=prof)
            rows.append(SweepRow(N, prof.name, r.mults, r.adds, r.total, r.total / N ** omega))
    return rows


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "profile", "mults", "adds", "total", "normalized"])
    for r in rows:
        w.writerow([r.N, r.profile, r.mults, r.adds, r.total, f"{r.normalized:.6g}"])
    return buf.getvalue()


@dataclass(frozen=True)
class CrossoverReport:
    first: int | None               # first grid N with p1 < p2
    persistent_from: int | None     # start of the final run of p1 < p2 reaching Nmax
    persists: bool                  # p1 < p2 at every grid point from `first` on
    grid: tuple[int, ...] = field(repr=False, default=())

    def describe(self) -> str:
        if self.first is None:
            return "crossover: none"
        return (f"crossover: first={self.first} persistent_from={self.persistent_from} "
                f"persists={'yes' if self.persists else 'no'}")


def crossover_search(p1: SimProfile, p2: SimProfile, nmin: int, nmax: int,
                     per_decade: int = 20) -> CrossoverReport:
    grid = log_grid(nmin, nmax, per_decade)
    wins = [simulate(N, profile=p1).total < simulate(N, profile=p2).total for N in grid]
    if not any(wins):
        return CrossoverReport(None, None, False, tuple(grid))
    first_i = wins.index(True)
    start = None
    if wins[-1]:
        start_i = len(wins) - 1
        while start_i > 0 and wins[start_i - 1]:
            start_i -= 1
        start = grid[start_i]
    return CrossoverReport(grid[first_i], start, all(wins[first_i:]), tuple(grid))
