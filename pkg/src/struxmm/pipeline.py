"""End-to-end search workflow on one shape.

1. flip search over Z2 (optionally around a protected ``<2,2,1>`` pattern),
2. structure search and disjoint group selection,
3. de Groote sampling for small support,
4. Hensel lifting with zero and structure preservation,
5. addition counting, exponent and leading coefficient.

Every stage writes its artifact before the next one starts, so a failing
stage leaves the earlier results on disk.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .additions import count_additions
from .complexity import ComplexityError, leading_coeff_general, solve_exponent
from .io import write_decomposition
from .restriction import write_restriction
from .rings import Z2
from .search.flips import (DEFAULT_SEED, SearchState, pattern_221, search_rank,
                           search_structure, step1_state)
from .search.hensel import LiftConstraintSet, hensel_lift
from .search.symmetry import degroote_sample
from .structure import analyze, structure_indicator, to_restriction
from .tensor import Shape, standard_decomposition, verify

MAX_VOLUME = 27
DEFAULT_SYMMETRY_TRIALS = 1000


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class PipelineConfig:
    shape: Shape
    pattern: str | None = None          # None or "221"
    seed: int = DEFAULT_SEED
    budget: int = 100_000
    structure_budget: int | None = None     # default: budget // 10
    plateau: int = 100_000
    target_rank: int | None = None
    symmetry_trials: int = DEFAULT_SYMMETRY_TRIALS
    preserve_zeros: bool = True
    preserve_structure: bool = True
    workers: int = 1
    max_volume: int = MAX_VOLUME


@dataclass
class PipelineReport:
    shape: Shape
    rank: int | None = None
    indicator: str | None = None
    omega0: float | None = None
    omega_note: str | None = None
    L: float | None = None
    A: int | None = None
    artifacts: dict = field(default_factory=dict)
    log: list = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [f"shape {self.shape}", f"rank {self.rank}", f"structure {self.indicator}"]
        out.append(f"omega0 {self.omega0:.6f}" if self.omega0 is not None
                   else f"omega0 n/a ({self.omega_note})")
        out.append(f"A {self.A}")
        out.append(f"L {self.L:.6f}" if self.L is not None else "L n/a")
        return out


def _walk_one(args):
    kind, state = args
    return search_rank(state) if kind == "rank" else search_structure(state)


def best_of_seeds(state: SearchState, kind: str, workers: int) -> SearchState:
    """Runs on seeds ``seed .. seed+workers-1``; lowest rank wins, then best score, then lowest seed."""
    if workers <= 1:
        return _walk_one((kind, state))
    jobs = [(kind, replace(state, seed=state.seed + i, trajectory=[])) for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_walk_one, jobs))
    return min(results, key=_merge_key)


def _merge_key(r: SearchState):
    score = tuple(-x for x in r.trajectory[-1][2:]) if r.trajectory else ()
    return (r.current.rank,) + score + (r.seed,)


def run_pipeline(cfg: PipelineConfig, outdir: str | Path) -> PipelineReport:
    shape = cfg.shape
    if shape.volume > cfg.max_volume:
        raise PipelineError("setup", f"shape {shape} exceeds desk scale (nmp <= {cfg.max_volume})")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    rep = PipelineReport(shape)

    def save(name, dec):
        path = out / name
        write_decomposition(dec, path)
        rep.artifacts[name] = str(path)

    # step 1: rank
    if cfg.pattern == "221":
        state = step1_state(shape, pattern_221(shape), seed=cfg.seed, budget=cfg.budget,
                            plateau=cfg.plateau,
                            target_rank=None if cfg.target_rank is None
                            else cfg.target_rank - 4)
    elif cfg.pattern is None:
        state = SearchState(standard_decomposition(shape, Z2), seed=cfg.seed, budget=cfg.budget,
                            plateau=cfg.plateau, target_rank=cfg.target_rank)
    else:
        raise PipelineError("setup", f"unknown pattern {cfg.pattern!r}")
    searching = cfg.budget > 0
    if searching:
        state = best_of_seeds(state, "rank", cfg.workers)
    rep.log.append({"stage": "rank", "seed": state.seed, "steps": state.steps,
                    "trajectory": state.trajectory})
    z2 = state.full()
    save("step1.dec", z2)

    # step 2: structure
    sbudget = cfg.budget // 10 if cfg.structure_budget is None else cfg.structure_budget
    if searching and sbudget > 0:
        st2 = best_of_seeds(replace(state, budget=sbudget, target_rank=None, steps=0,
                                    trajectory=[], objective="structureCount"),
                            "structure", cfg.workers)
        rep.log.append({"stage": "structure", "seed": st2.seed, "steps": st2.steps,
                        "trajectory": st2.trajectory})
        z2 = st2.full()
    save("step2.dec", z2)
    if not verify(z2).ok:
        raise PipelineError("structure", verify(z2).describe())

    # step 3: symmetry
    if searching and cfg.symmetry_trials > 0:
        z2 = degroote_sample(z2, cfg.symmetry_trials, cfg.seed)
    rep.log.append({"stage": "symmetry", "trials": cfg.symmetry_trials if searching else 0,
                    "support": z2.support})
    save("step3.dec", z2)
    _, selection, _ = analyze(z2)
    if not searching:
        selection = []

    # step 4: lift
    cons = LiftConstraintSet.build(z2, zeros=cfg.preserve_zeros,
                                   structure=cfg.preserve_structure and bool(selection),
                                   groups=selection)
    lifted = hensel_lift(z2, cons, seed=cfg.seed)
    rep.log.append({"stage": "lift", "stages": lifted.stages, "attempts": lifted.attempts,
                    "failure": lifted.failure.describe() if lifted.failure else None})
    if not lifted.ok:
        _write_log(out, rep)
        raise PipelineError("lift", lifted.failure.describe())
    dec = lifted.decomposition
    save("step4.dec", dec)

    # step 5: additions and complexity
    count = count_additions(dec)
    res, selection, _ = analyze(dec)
    if not searching:
        selection = []
        res = to_restriction(dec, [])
    else:
        res = to_restriction(dec, selection)
    res = res.with_adds(count.per_phase)
    rest_path = out / "restriction.txt"
    write_restriction(res, rest_path)
    rep.artifacts["restriction.txt"] = str(rest_path)
    rep.rank = dec.rank
    rep.indicator = structure_indicator(res)
    rep.A = count.A
    try:
        rep.omega0 = solve_exponent(res).omega0
        rep.L = leading_coeff_general(res, count.A).L
    except ComplexityError as exc:
        rep.omega_note = str(exc)
    _write_log(out, rep)
    (out / "report.txt").write_text("\n".join(rep.lines()) + "\n")
    rep.artifacts["report.txt"] = str(out / "report.txt")
    return rep


def _write_log(out: Path, rep: PipelineReport):
    path = out / "run.log"
    with path.open("w") as fh:
        for entry in rep.log:
            fh.write(json.dumps(entry, default=list) + "\n")
    rep.artifacts["run.log"] = str(path)
