"""Random instance generators shared by the property and acceptance tests."""

from __future__ import annotations

import random

from struxmm import catalog
from struxmm.rings import Z2
from struxmm.search.flips import flip
from struxmm.search.symmetry import apply_sandwich, random_sandwich
from struxmm.structure import analyze, structure_indicator
from struxmm.tensor import change_ring, standard_decomposition, tensor_of


def z2_pool():
    pool = [change_ring(catalog.load(n), Z2) for n in ("strassen", "winograd", "s333_r23",
                                                         "mp333_r23")]
    pool += [standard_decomposition(s, Z2) for s in ((2, 2, 2), (2, 3, 2), (3, 3, 3))]
    return pool


def flip_pairs(dec):
    pairs = []
    for s in range(3):
        seen: dict = {}
        for i, t in enumerate(dec.terms):
            f = t.factors()[s]
            if any(f):
                seen.setdefault(f, []).append(i)
        for idx in seen.values():
            pairs += [(i, j, s) for i in idx for j in idx if i != j]
    return pairs


def flip_invariance_cases(n: int, seed: int = 11):
    """Yield ``n`` (ok, description) results of random flips on walked Z2 schemes."""
    rng = random.Random(seed)
    pool = z2_pool()
    cur = [d for d in pool]
    done = 0
    while done < n:
        k = rng.randrange(len(cur))
        dec = cur[k]
        pairs = flip_pairs(dec)
        if not pairs:
            cur[k] = pool[k]
            continue
        i, j, s = rng.choice(pairs)
        new = flip(dec, i, j, "abc"[s])
        ok = (tensor_of(new) == tensor_of(dec)).all()
        yield bool(ok), (k, i, j, s)
        done += 1
        # keep walking from the flipped scheme, restarting now and then
        cur[k] = new.normalize() if rng.random() < 0.95 else pool[k]


def symmetry_cases(n: int, seed: int = 13):
    """Yield ``n`` (verifies, indicator kept) pairs for random sandwiches."""
    from struxmm.tensor import verify

    rng = random.Random(seed)
    pool = [change_ring(catalog.load("s333_r23"), Z2), catalog.load("s333_r23"),
            change_ring(catalog.load("mp333_r23"), Z2), catalog.strassen(),
            change_ring(catalog.winograd(), Z2)]
    ind = [structure_indicator(analyze(d)[0]) for d in pool]
    for c in range(n):
        k = c % len(pool)
        img = apply_sandwich(pool[k], random_sandwich(pool[k], rng))
        yield verify(img).ok, structure_indicator(analyze(img)[0]) == ind[k]
