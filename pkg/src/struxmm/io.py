"""Plain-text formats: decompositions, restrictions and integer matrices.

Canonical decomposition format::

    n m p r ring
                              <- one blank line before every term
    a11 a12 ... (n*m ints, row-major)
    b11 ...     (m*p ints, row-major)
    c11 ...     (p*n ints, entry [k,i] order, k-major)

``ring`` is ``z2``, ``z2^K`` or ``int``.  Blank lines and ``#`` comments are
ignored by the reader; :func:`dumps_decomposition` produces the canonical
spacing, so canonical files round-trip byte for byte.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rings import Ring
from .tensor import Decomposition, RankOneTerm, Shape


class FormatError(ValueError):
    pass


def _content_lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def _ints(line: str) -> list[int]:
    try:
        return [int(x) for x in line.split()]
    except ValueError as exc:
        raise FormatError(f"expected integers, got {line!r}") from exc


def loads_decomposition(text: str) -> Decomposition:
    lines = _content_lines(text)
    if not lines:
        raise FormatError("empty decomposition file")
    head = lines[0].split()
    if len(head) != 5:
        raise FormatError(f"header must be 'n m p r ring', got {lines[0]!r}")
    n, m, p, r = (int(x) for x in head[:4])
    ring = Ring.parse(head[4])
    body = lines[1:]
    if len(body) != 3 * r:
        raise FormatError(f"expected {3 * r} factor lines for rank {r}, found {len(body)}")
    sizes = (n * m, m * p, p * n)
    terms = []
    for t in range(r):
        factors = []
        for slot in range(3):
            vals = _ints(body[3 * t + slot])
            if len(vals) != sizes[slot]:
                raise FormatError(f"term {t} factor {'abc'[slot]}: expected {sizes[slot]} "
                                  f"entries, got {len(vals)}")
            factors.append(tuple(ring.reduce(v) for v in vals))
        terms.append(RankOneTerm(*factors))
    return Decomposition((Shape(n, m, p),), ring, tuple(terms))


def dumps_decomposition(dec: Decomposition) -> str:
    if dec.is_direct_sum:
        raise FormatError("direct sums have no canonical serialization")
    n, m, p = dec.shape
    parts = [f"{n} {m} {p} {dec.rank} {dec.ring.token}\n"]
    for t in dec.terms:
        parts.append("\n")
        for f in t.factors():
            parts.append(" ".join(str(x) for x in f) + "\n")
    return "".join(parts)


def read_decomposition(path: str | Path) -> Decomposition:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".tm":
        return loads_triple_matrices(text)
    return loads_decomposition(text)


def write_decomposition(dec: Decomposition, path: str | Path) -> None:
    Path(path).write_text(dumps_decomposition(dec))


def loads_triple_matrices(text: str, ring: Ring | None = None, c_order: str = "ki") -> Decomposition:
    """Read the factor-matrix layout of public decomposition collections.

    Header ``n m p r [ring]``, then three integer matrices with ``r`` columns
    each: ``U`` (``n*m`` rows), ``V`` (``m*p`` rows), ``W`` (``p*n`` rows).
    Column ``t`` of the three matrices is term ``t``.  ``W`` rows follow the
    ``c_ki`` order by default; ``c_order="ik"`` accepts row-major ``C[i,k]``.
    """
    lines = _content_lines(text)
    head = lines[0].split()
    if len(head) not in (4, 5):
        raise FormatError(f"header must be 'n m p r [ring]', got {lines[0]!r}")
    n, m, p, r = (int(x) for x in head[:4])
    if ring is None:
        ring = Ring.parse(head[4]) if len(head) == 5 else Ring.parse("int")
    rows = [_ints(line) for line in lines[1:]]
    need = n * m + m * p + p * n
    if len(rows) != need or any(len(x) != r for x in rows):
        raise FormatError(f"expected {need} rows of {r} integers")
    M = np.array(rows, dtype=object)
    U, V, W = M[: n * m], M[n * m: n * m + m * p], M[n * m + m * p:]
    if c_order == "ik":
        W = W.reshape(n, p, r).transpose(1, 0, 2).reshape(p * n, r)
    elif c_order != "ki":
        raise ValueError("c_order must be 'ki' or 'ik'")
    terms = [RankOneTerm(*[tuple(ring.reduce(int(x)) for x in X[:, t]) for X in (U, V, W)])
             for t in range(r)]
    return Decomposition((Shape(n, m, p),), ring, tuple(terms))


def dumps_triple_matrices(dec: Decomposition) -> str:
    n, m, p = dec.shape
    lines = [f"{n} {m} {p} {dec.rank} {dec.ring.token}"]
    for slot in range(3):
        size = dec.factor_sizes[slot]
        for row in range(size):
            lines.append(" ".join(str(t.factors()[slot][row]) for t in dec.terms))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# linear-form notation, e.g. "A11+A22" / "C12-C21"
# ---------------------------------------------------------------------------

_TERM = re.compile(r"([+-]?)\s*(\d*)\s*\*?\s*([ABC])(\d)(\d)")


def parse_linear_form(expr: str, letter: str, rows: int, cols: int) -> list[int]:
    """Parse ``"A11 - 2*A21"`` into a flat row-major coefficient list (1-based indices)."""
    out = [0] * (rows * cols)
    pos = 0
    expr = expr.replace(" ", "")
    while pos < len(expr):
        mt = _TERM.match(expr, pos)
        if not mt or mt.group(3) != letter:
            raise FormatError(f"cannot parse {expr!r} at {expr[pos:]!r}")
        sign = -1 if mt.group(1) == "-" else 1
        coef = int(mt.group(2)) if mt.group(2) else 1
        r, c = int(mt.group(4)) - 1, int(mt.group(5)) - 1
        if not (0 <= r < rows and 0 <= c < cols):
            raise FormatError(f"index out of range in {mt.group(0)!r}")
        out[r * cols + c] += sign * coef
        pos = mt.end()
    return out


def decomposition_from_products(shape: Shape | Sequence[int], ring: Ring,
                                products: Iterable[tuple[str, str, str]]) -> Decomposition:
    """Build a decomposition from ``(A-form, B-form, C-form)`` strings.

    The C-form lists the output entries ``Cik`` the product is added to,
    for example ``"C11+C22"``; it is converted to the ``c_ki`` layout.
    """
    shape = shape if isinstance(shape, Shape) else Shape(*shape)
    n, m, p = shape
    terms = []
    for a_expr, b_expr, c_expr in products:
        a = parse_linear_form(a_expr, "A", n, m)
        b = parse_linear_form(b_expr, "B", m, p)
        c_rowmajor = parse_linear_form(c_expr, "C", n, p)
        c = [c_rowmajor[i * p + k] for k in range(p) for i in range(n)]
        terms.append(RankOneTerm(*(tuple(ring.reduce(x) for x in f) for f in (a, b, c))))
    return Decomposition((shape,), ring, tuple(terms))


# ---------------------------------------------------------------------------
# integer matrices
# ---------------------------------------------------------------------------

def loads_matrix(text: str) -> np.ndarray:
    lines = _content_lines(text)
    if not lines:
        raise FormatError("empty matrix file")
    head = _ints(lines[0])
    if len(head) != 2:
        raise FormatError("matrix header must be 'rows cols'")
    rows, cols = head
    vals: list[int] = []
    for line in lines[1:]:
        vals.extend(_ints(line))
    if len(vals) != rows * cols:
        raise FormatError(f"expected {rows * cols} entries, got {len(vals)}")
    return np.array(vals, dtype=object).reshape(rows, cols)


def dumps_matrix(M) -> str:
    M = np.asarray(M)
    rows, cols = M.shape
    lines = [f"{rows} {cols}"]
    lines.extend(" ".join(str(int(x)) for x in row) for row in M)
    return "\n".join(lines) + "\n"
