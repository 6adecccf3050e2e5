"""Command-line front end: ``struxmm <subcommand> ...``.

Exit status is 0 on success, 1 on a verification or search failure and 2
on a usage error.  Every flag can be given a default through an
environment variable ``STRUXMM_<FLAG>`` (``--n0`` is ``STRUXMM_N0``,
``--preserve-zeros`` is ``STRUXMM_PRESERVE_ZEROS``); command-line values
win over the environment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .additions import count_additions
from .complexity import (ComplexityError, exponent_from_rank, leading_coeff_general,
                         omega_k_bound, solve_exponent, strict_cost_bound, symmetrize)
from .executor import Counters, PlanError, compile_plan, multiply, standard_multiply
from .io import (FormatError, dumps_decomposition, dumps_matrix, loads_decomposition,
                 loads_matrix, write_decomposition)
from .pipeline import PipelineConfig, PipelineError, run_pipeline
from .restriction import dumps_restriction, read_restriction
from .rings import Z2, Ring
from .search.flips import (DEFAULT_SEED, SearchState, pattern_221, search_rank,
                           search_structure)
from .search.hensel import DEFAULT_MAX_K, LiftConstraintSet, coefficient_set, hensel_lift
from .search.symmetry import degroote_sample
from .simulator import crossover_search, read_profile, sweep, sweep_csv
from .structure import analyze, block_list, structure_indicator
from .tensor import Shape, change_ring, standard_decomposition, verify

ENV_PREFIX = "STRUXMM_"


class UsageError(Exception):
    pass


class Failure(Exception):
    """Verification or search failure: exit status 1."""


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------

def _data_path(name: str) -> Path | None:
    from importlib import resources

    p = resources.files("struxmm") / "data" / name
    return Path(str(p)) if p.is_file() else None


def resolve_file(name: str) -> Path:
    """A path on disk, else a bundled data file of that name."""
    p = Path(name)
    if p.is_file():
        return p.resolve()
    bundled = _data_path(p.name)
    if bundled is not None:
        return bundled
    raise UsageError(f"no such file: {name}")


def load_decomposition(name: str):
    """A decomposition file, else a catalog name (``strassen``, ``s333_r23``, ...)."""
    p = Path(name)
    if p.is_file():
        return loads_decomposition(p.read_text())
    stem = p.name[:-4] if p.name.endswith(".dec") else p.name
    try:
        return catalog.load(stem)
    except (FileNotFoundError, ValueError, OSError):
        raise UsageError(f"no such decomposition file or catalog entry: {name}") from None


def _shape(vals) -> Shape:
    if len(vals) != 3 or min(vals) < 1:
        raise UsageError("--shape takes three positive integers")
    return Shape(*vals)


def _emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _write_log(path: str | None, entry: dict):
    if path:
        with open(path, "a") as fh:
            fh.write(json.dumps(entry, default=list) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    dec = load_decomposition(args.input)
    if args.ring:
        dec = change_ring(dec, Ring.parse(args.ring))
    rep = verify(dec)
    print(rep.describe())
    return 0 if rep.ok else 1


def cmd_analyze(args) -> int:
    dec = load_decomposition(args.input)
    res, sel, cands = analyze(dec, args.objective)
    covered = sum(g.size for g in sel)
    print(f"structure {structure_indicator(res)}")
    print(f"candidates {len(cands)}")
    print(f"coverage {covered}/{dec.rank}")
    for g in block_list(dec, sel):
        if g.size > 1:
            print(f"block {tuple(g.block_shape)} terms={list(g.term_indices)} "
                  f"shared={','.join(g.shared_slots)}")
    if args.output:
        Path(args.output).write_text(dumps_restriction(res))
    return 0


def _restriction_arg(args):
    if not args.restriction:
        raise UsageError("--restriction is required")
    return read_restriction(resolve_file(args.restriction))


def cmd_exponent(args) -> int:
    if args.rank is not None:
        if not args.shape:
            raise UsageError("--rank needs --shape")
        rep = exponent_from_rank(_shape(args.shape), args.rank)
    else:
        rep = solve_exponent(_restriction_arg(args), kfold=args.kfold)
    print(f"omega0={rep.omega0:.6f}")
    print(f"method={rep.method}")
    print(f"residual={rep.equation_residual:.3e}")
    return 0


def cmd_coeff(args) -> int:
    res = _restriction_arg(args)
    rep = leading_coeff_general(res, args.adds, kfold=args.kfold)
    print(f"L={rep.L:.6f}")
    print(f"A={rep.adds}")
    print(f"variant={rep.variant}")
    return 0


def cmd_bound(args) -> int:
    if args.k is not None:
        res = _restriction_arg(args)
        rep = omega_k_bound(symmetrize(res), args.k)
        print(f"k={rep.k}")
        print(f"omega0={rep.omega0:.6f}")
        print(f"omega1={rep.omega1:.6f}")
        print(f"F={rep.F:.6g}")
        print(f"omega_k<={rep.bound:.6f}")
        return 0
    if not args.input:
        raise UsageError("bound needs a decomposition (or --restriction with --k)")
    dec = load_decomposition(args.input)
    if not dec.shape.is_square():
        raise UsageError("strict bound needs a square base shape")
    A = count_additions(dec).A if args.adds is None else args.adds
    rep = strict_cost_bound(dec.shape.n, dec.rank, A)
    print(f"n={dec.shape.n} r={dec.rank} A={A}")
    print(f"L={rep.L:.6f}")
    print(f"d={rep.d:.6f}")
    print(f"c={rep.c:.6f}")
    return 0


def cmd_simulate(args) -> int:
    if not args.profile:
        raise UsageError("simulate needs at least one --profile")
    profiles = [read_profile(resolve_file(p)) for p in args.profile]
    if args.crossover:
        if len(profiles) != 2:
            raise UsageError("--crossover compares exactly two profiles")
        rep = crossover_search(profiles[0], profiles[1], args.nmin, args.nmax, args.per_decade)
        print(rep.describe())
        return 0
    sys.stdout.write(sweep_csv(sweep(profiles, args.nmin, args.nmax, args.per_decade)))
    return 0


def _read_matrix(name: str) -> np.ndarray:
    return loads_matrix(Path(name).read_text())


def cmd_multiply(args) -> int:
    A, B = _read_matrix(args.a), _read_matrix(args.b)
    if A.shape[1] != B.shape[0]:
        raise UsageError(f"inner dimensions differ: {A.shape} x {B.shape}")
    dec = load_decomposition(args.plan)
    plan = compile_plan(dec, n0=args.n0)
    ctr = Counters()
    C = multiply(A, B, plan, ctr)
    _emit(dumps_matrix(C.tolist()), args.output)
    print(f"mults={ctr.mults} adds={ctr.adds} depth={ctr.max_depth}", file=sys.stderr)
    if args.check:
        ref = standard_multiply(A, B)
        if C.tolist() != ref.tolist():
            diff = [(i, j) for i, (r1, r2) in enumerate(zip(C.tolist(), ref.tolist()))
                    for j, (x, y) in enumerate(zip(r1, r2)) if x != y]
            print(f"check FAIL first difference at {diff[0]}", file=sys.stderr)
            return 1
        print("check PASS", file=sys.stderr)
    return 0


def _protected(args, shape: Shape):
    if not args.protect:
        return ()
    if args.protect == "221":
        return pattern_221(shape)
    pat = load_decomposition(args.protect)
    return tuple(change_ring(pat, Z2).terms)


def cmd_flipsearch(args) -> int:
    if args.input:
        start = change_ring(load_decomposition(args.input), Z2)
        shape = start.shape
    elif args.shape:
        shape = _shape(args.shape)
        start = standard_decomposition(shape, Z2)
    else:
        raise UsageError("flipsearch needs an input decomposition or --shape")
    prot = _protected(args, shape)
    keep = [t for t in start.terms if t not in prot]
    if len(keep) + len(prot) != len(start.terms):
        raise UsageError("protected terms must appear in the start decomposition")
    state = SearchState(start.with_terms(keep), prot, args.objective, args.seed, args.budget,
                        args.plateau, args.target_rank)
    out = search_structure(state) if args.objective == "structureCount" else search_rank(state)
    dec = out.full()
    if not verify(dec).ok:
        raise Failure("search result does not verify")
    _emit(dumps_decomposition(dec), args.output)
    _write_log(args.log, {"command": "flipsearch", "seed": out.seed, "steps": out.steps,
                          "rank": dec.rank, "trajectory": out.trajectory})
    print(f"rank={dec.rank} steps={out.steps} seed={out.seed}", file=sys.stderr)
    if args.target_rank is not None and dec.rank > args.target_rank:
        return 1
    return 0


def cmd_symmetry(args) -> int:
    dec = change_ring(load_decomposition(args.input), Z2)
    before = dec.support
    out = degroote_sample(dec, args.trials, args.seed)
    _emit(dumps_decomposition(out), args.output)
    _write_log(args.log, {"command": "symmetry", "seed": args.seed, "trials": args.trials,
                          "support_before": before, "support_after": out.support})
    print(f"support {before} -> {out.support}", file=sys.stderr)
    return 0


def cmd_lift(args) -> int:
    dec = load_decomposition(args.input)
    if dec.ring != Z2:
        dec = change_ring(dec, Z2)
    groups = analyze(dec)[1] if args.preserve_structure else None
    cons = LiftConstraintSet.build(dec, zeros=args.preserve_zeros,
                                   structure=args.preserve_structure, groups=groups)
    res = hensel_lift(dec, cons, max_k=args.max_k, seed=args.seed)
    _write_log(args.log, {"command": "lift", "seed": args.seed, "stages": res.stages,
                          "attempts": res.attempts,
                          "failure": res.failure.describe() if res.failure else None})
    if not res.ok:
        print(res.failure.describe(), file=sys.stderr)
        return 1
    out = res.decomposition
    _emit(dumps_decomposition(out), args.output)
    print(f"lifted in {res.stages} stage(s); coefficients {sorted(coefficient_set(out))}; "
          f"{verify(out).describe()}", file=sys.stderr)
    return 0


def cmd_addcount(args) -> int:
    dec = load_decomposition(args.input)
    cnt = count_additions(dec, cse=not args.no_cse)
    a, b, c = cnt.per_phase
    print(f"A={cnt.A}")
    print(f"phases={a},{b},{c}")
    return 0


def cmd_pipeline(args) -> int:
    if not args.shape:
        raise UsageError("pipeline needs --shape")
    cfg = PipelineConfig(_shape(args.shape), pattern=args.pattern, seed=args.seed,
                         budget=args.budget, plateau=args.plateau, target_rank=args.target_rank,
                         symmetry_trials=args.trials, preserve_zeros=args.preserve_zeros,
                         preserve_structure=args.preserve_structure, workers=args.workers)
    try:
        rep = run_pipeline(cfg, args.output or "pipeline-out")
    except PipelineError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print("\n".join(rep.lines()))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="struxmm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="subcommand")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"random seed (default {DEFAULT_SEED}; 0 draws from entropy)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    def add(name, fn, help_text, **kw):
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text, **kw)
        sp.set_defaults(func=fn)
        return sp

    sp = add("verify", cmd_verify, "check the Brent equations of a decomposition")
    sp.add_argument("input")
    sp.add_argument("--ring", help="verify after reducing into this ring (int, z2, z2^k)")

    sp = add("analyze", cmd_analyze, "detect structure groups and print the indicator")
    sp.add_argument("input")
    sp.add_argument("--objective", choices=("exponent", "coverage"), default="exponent")
    sp.add_argument("-o", "--output", help="write the restriction file here")

    for name, fn, text in (("exponent", cmd_exponent, "solve for omega0 of a restriction"),
                           ("coeff", cmd_coeff, "leading coefficient of a restriction")):
        sp = add(name, fn, text)
        sp.add_argument("--restriction")
        sp.add_argument("--kfold", type=int)
        if name == "exponent":
            sp.add_argument("--shape", type=int, nargs=3)
            sp.add_argument("--rank", type=int)
        else:
            sp.add_argument("--adds", type=int)

    sp = add("bound", cmd_bound, "strict cost bound of a square scheme, or the omega_k bound")
    sp.add_argument("input", nargs="?")
    sp.add_argument("--adds", type=int)
    sp.add_argument("--restriction")
    sp.add_argument("--k", type=int)

    sp = add("simulate", cmd_simulate, "operation counts of recursion profiles as CSV")
    sp.add_argument("--profile", action="append")
    sp.add_argument("--nmin", type=int, default=1)
    sp.add_argument("--nmax", type=int, default=10 ** 6)
    sp.add_argument("--per-decade", type=int, default=10)
    sp.add_argument("--crossover", action="store_true")

    sp = add("multiply", cmd_multiply, "exact product of two integer matrices")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--plan", default="strassen", help="decomposition file or catalog name")
    sp.add_argument("--n0", type=int)
    sp.add_argument("--check", action="store_true")
    sp.add_argument("-o", "--output")

    def search_flags(sp):
        sp.add_argument("--budget", type=int, default=100_000)
        sp.add_argument("--plateau", type=int, default=100_000)
        sp.add_argument("--target-rank", type=int)
        sp.add_argument("--log", help="append a JSON run log line here")

    sp = add("flipsearch", cmd_flipsearch, "Z2 flip-graph random walk")
    sp.add_argument("input", nargs="?")
    sp.add_argument("--shape", type=int, nargs=3)
    sp.add_argument("--objective", choices=("rank", "structureCount"), default="rank")
    sp.add_argument("--protect", help="'221' or a decomposition file of protected terms")
    sp.add_argument("-o", "--output")
    search_flags(sp)

    sp = add("symmetry", cmd_symmetry, "de Groote sampling for small support")
    sp.add_argument("input")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("-o", "--output")
    sp.add_argument("--log")

    sp = add("lift", cmd_lift, "Hensel lift a Z2 decomposition to the integers")
    sp.add_argument("input")
    sp.add_argument("--preserve-zeros", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("--preserve-structure", action=argparse.BooleanOptionalAction, default=False)
    sp.add_argument("--max-k", type=int, default=DEFAULT_MAX_K)
    sp.add_argument("-o", "--output")
    sp.add_argument("--log")

    sp = add("addcount", cmd_addcount, "greedy CSE addition count")
    sp.add_argument("input")
    sp.add_argument("--no-cse", action="store_true")

    sp = add("pipeline", cmd_pipeline, "flip search, structure, symmetry, lift, count")
    sp.add_argument("--shape", type=int, nargs=3)
    sp.add_argument("--pattern", choices=("221",))
    sp.add_argument("--objective", choices=("rank",), default="rank")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--preserve-zeros", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("--preserve-structure", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("-o", "--output", help="artifact directory (default pipeline-out)")
    search_flags(sp)

    for sp in sub.choices.values():
        _apply_env(sp)
    return p


def _apply_env(parser: argparse.ArgumentParser, env=None):
    env = os.environ if env is None else env
    for act in parser._actions:
        if not act.option_strings or act.dest == "help":
            continue
        key = ENV_PREFIX + act.dest.upper()
        if key not in env:
            continue
        raw = env[key]
        if act.nargs == 0 or isinstance(act, argparse.BooleanOptionalAction):
            val = _bool(raw)
        elif act.nargs in (3, "+"):
            val = [act.type(x) if act.type else x for x in raw.replace(",", " ").split()]
        elif act.type is not None:
            val = act.type(raw)
        else:
            val = raw
        if isinstance(act, argparse._AppendAction):
            val = raw.split(os.pathsep)
        parser.set_defaults(**{act.dest: val})


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    except ValueError as exc:
        print(f"struxmm: bad environment override: {exc}", file=sys.stderr)
        return 2
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"struxmm {args.command}: {exc}", file=sys.stderr)
        return 2
    except (FormatError, ComplexityError, PlanError) as exc:
        print(f"struxmm {args.command}: {exc}", file=sys.stderr)
        return 2
    except Failure as exc:
        print(f"struxmm {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
