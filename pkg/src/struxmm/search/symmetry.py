"""De Groote symmetries ``(U, V, W)`` acting on decompositions.

``a -> U a V^-1``, ``b -> V b W^-1``, ``c -> W c U^-1`` maps every
decomposition of ``<n,m,p>`` to another one of the same rank with the same
structure, since shared factors stay shared.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from ..rings import Z2
from ..tensor import Decomposition, RankOneTerm, verify
from . import gf2


@dataclass(frozen=True)
class Sandwich:
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    Ui: np.ndarray
    Vi: np.ndarray
    Wi: np.ndarray


def _mat(f, rows, cols):
    return np.array(f, dtype=object).reshape(rows, cols)


def apply_sandwich(dec: Decomposition, s: Sandwich) -> Decomposition:
    n, m, p = dec.shape
    ring = dec.ring
    terms = []
    for t in dec.terms:
        a = s.U.dot(_mat(t.a, n, m)).dot(s.Vi)
        b = s.V.dot(_mat(t.b, m, p)).dot(s.Wi)
        c = s.W.dot(_mat(t.c, p, n)).dot(s.Ui)
        terms.append(RankOneTerm(*(tuple(ring.reduce(int(x)) for x in X.flat) for X in (a, b, c))))
    return dec.with_terms(terms)


def identity_sandwich(n: int, m: int, p: int) -> Sandwich:
    eye = [np.eye(k, dtype=np.int64).astype(object) for k in (n, m, p)]
    return Sandwich(*eye, *eye)


def _z2_pair(k: int, rng: random.Random):
    rows = gf2.random_invertible(k, rng)
    inv = gf2.inverse(rows, k)
    return (np.array(gf2.to_lists(rows, k), dtype=object),
            np.array(gf2.to_lists(inv, k), dtype=object))


def _unimodular_pair(k: int, rng: random.Random, moves: int = 4):
    """Random unimodular matrix with exact inverse, from elementary row moves."""
    M = np.eye(k, dtype=np.int64).astype(object)
    Mi = M.copy()
    for _ in range(moves if k > 1 else 0):
        i, j = rng.sample(range(k), 2)
        s = rng.choice((1, -1))
        M[i] += s * M[j]            # E M with E = I + s e_ij
        Mi[:, j] -= s * Mi[:, i]    # M^-1 E^-1
    perm = list(range(k))
    rng.shuffle(perm)
    P = np.eye(k, dtype=np.int64)[perm].astype(object)
    signs = np.diag([rng.choice((1, -1)) for _ in range(k)]).astype(object)
    S = signs.dot(P)
    return S.dot(M), Mi.dot(P.T).dot(signs)


def random_sandwich(dec: Decomposition, rng: random.Random) -> Sandwich:
    n, m, p = dec.shape
    pair = _z2_pair if dec.ring == Z2 else _unimodular_pair
    (U, Ui), (V, Vi), (W, Wi) = (pair(k, rng) for k in (n, m, p))
    return Sandwich(U, V, W, Ui, Vi, Wi)


def degroote_sample(dec: Decomposition, trials: int = 100, seed: int = 1729,
                    check: bool = True) -> Decomposition:
    """Smallest-support image of ``dec`` among ``trials`` random symmetries (and ``dec`` itself)."""
    if dec.ring.modulus is not None and dec.ring != Z2:
        raise ValueError("symmetry sampling runs over Z2 or the integers")
    rng = random.Random(seed)
    best, best_support = dec, dec.support
    for _ in range(trials):
        cand = apply_sandwich(dec, random_sandwich(dec, rng))
        if cand.support < best_support:
            best, best_support = cand, cand.support
    if check and best is not dec and not verify(best).ok:
        raise AssertionError("symmetry image failed verification")
    return best
