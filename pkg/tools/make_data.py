"""Regenerate the bundled decompositions, restrictions and profiles.

    python3 tools/make_data.py            # writes into src/struxmm/data

Deterministic: every random choice is seeded below.
"""

from __future__ import annotations

import random
import sys
import tempfile
from pathlib import Path

from struxmm import catalog
from struxmm.io import read_decomposition, write_decomposition
from struxmm.pipeline import PipelineConfig, run_pipeline
from struxmm.restriction import StructuredRestriction, write_restriction
from struxmm.rings import Z2
from struxmm.tensor import RankOneTerm, Shape, kronecker_product, reduce_mod, sign_normal, verify

DATA = Path(__file__).resolve().parents[1] / "src" / "struxmm" / "data"


def scheme_333(workdir: Path):
    """<3,3,3> of rank 23 with structure 1^15 2^2 4, from the full pipeline."""
    cfg = PipelineConfig(Shape(3, 3, 3), pattern="221", seed=2, budget=1_000_000,
                         plateau=200_000, target_rank=23, structure_budget=20_000,
                         symmetry_trials=2000)
    rep = run_pipeline(cfg, workdir)
    print("\n".join(rep.lines()))
    return read_decomposition(rep.artifacts["step4.dec"])


def _axpy(u, v, lam):
    return tuple(x + lam * y for x, y in zip(u, v))


def integer_flip_walk(dec, seed: int, steps: int, bound: int = 1):
    """Integer flips (shared factor up to sign) until the Z2 reduction shares a new factor.

    ``a(x)b(x)c + a(x)b'(x)c' = a(x)b(x)(c + l c') + a(x)(b' - l b)(x)c'`` for ``l = +-1``;
    moves leaving coefficients outside ``[-bound, bound]`` are refused.
    """
    rng = random.Random(seed)
    terms = [list(t.factors()) for t in dec.terms]
    for step in range(1, steps + 1):
        s = rng.randrange(3)
        i, j = rng.sample(range(len(terms)), 2)
        (ni, si), (nj, sj) = sign_normal(terms[i][s]), sign_normal(terms[j][s])
        if ni != nj:
            continue
        s1, s2 = (s + 1) % 3, (s + 2) % 3
        fj = list(terms[j])
        if si != sj:
            fj[s] = tuple(-x for x in fj[s])
            fj[s1] = tuple(-x for x in fj[s1])
        lam = rng.choice((1, -1))
        c = _axpy(terms[i][s2], fj[s2], lam)
        b = _axpy(fj[s1], terms[i][s1], -lam)
        if max(map(abs, c + b)) > bound:
            continue
        terms[i][s2] = c
        fj[s1] = b
        terms[j] = fj
        terms = [t for t in terms if all(any(f) for f in t)]
        if step % 50 == 0:
            cand = dec.with_terms([RankOneTerm(*t) for t in terms])
            red = reduce_mod(cand, Z2)
            if red.new_shared_factors:
                assert verify(cand).ok
                return cand, step
    raise RuntimeError("no mod-2-only shared factor found")


def restrictions():
    return {
        "r666.txt": StructuredRestriction.from_counts((6, 6, 6), [((1, 1, 1), 117), ((1, 1, 2), 18)],
                                                      adds=(691,)),
        "r666_137.txt": StructuredRestriction.from_counts((6, 6, 6), [((1, 1, 1), 137), ((1, 1, 2), 8)]),
        "r333.txt": StructuredRestriction.from_counts(
            (3, 3, 3), [((1, 1, 1), 15), ((1, 1, 2), 2), ((1, 2, 2), 1)], adds=(61,)),
        "r216.txt": StructuredRestriction.from_counts((216, 216, 216), [((1, 1, 1), 3_581_065)]),
    }


PROFILES = {
    "structured.prof": "10000 restriction r666.txt 691\n35 winograd - -\n1 standard - -\n",
    "winograd.prof": "35 winograd - -\n1 standard - -\n",
    "strassen.prof": "2 strassen - -\n1 standard - -\n",
}


def main(argv=None):
    DATA.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        s333 = scheme_333(Path(tmp))
    write_decomposition(s333, DATA / "s333_r23.dec")
    mp333, steps = integer_flip_walk(s333, seed=5, steps=200_000)
    print(f"mod-2-only sharing after {steps} integer flips: "
          f"{reduce_mod(mp333, Z2).new_shared_factors}")
    write_decomposition(mp333, DATA / "mp333_r23.dec")
    strassen = catalog.strassen()
    write_decomposition(kronecker_product(strassen, s333), DATA / "s666_r161.dec")
    write_decomposition(kronecker_product(strassen, mp333), DATA / "mp666_r161.dec")
    for name, res in restrictions().items():
        write_restriction(res, DATA / name)
    for name, text in PROFILES.items():
        (DATA / name).write_text(text)
    for p in sorted(DATA.iterdir()):
        print(p.name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
