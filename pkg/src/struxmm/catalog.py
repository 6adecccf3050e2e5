"""Named decompositions shipped with the package."""

from __future__ import annotations

from importlib import resources

from .io import decomposition_from_products, loads_decomposition
from .rings import INTEGER, Ring
from .tensor import Decomposition, Shape, standard_decomposition

STRASSEN_PRODUCTS = (
    ("A11+A22", "B11+B22", "C11+C22"),
    ("A21+A22", "B11", "C21-C22"),
    ("A11", "B12-B22", "C12+C22"),
    ("A22", "B21-B11", "C11+C21"),
    ("A11+A12", "B22", "C12-C11"),
    ("A21-A11", "B11+B12", "C22"),
    ("A12-A22", "B21+B22", "C11"),
)

# Winograd's variant, written out from its usual straight-line form
# S1=A21+A22, S2=S1-A11, S3=A11-A21, S4=A12-S2 (and T1..T4 on the B side).
WINOGRAD_PRODUCTS = (
    ("A11", "B11", "C11+C12+C21+C22"),
    ("A12", "B21", "C11"),
    ("A11+A12-A21-A22", "B22", "C12"),
    ("A22", "B11-B12-B21+B22", "-C21"),
    ("A21+A22", "B12-B11", "C12+C22"),
    ("A21+A22-A11", "B22-B12+B11", "C12+C21+C22"),
    ("A11-A21", "B22-B12", "C21+C22"),
)


def strassen(ring: Ring = INTEGER) -> Decomposition:
    return decomposition_from_products(Shape(2, 2, 2), ring, STRASSEN_PRODUCTS)


def winograd(ring: Ring = INTEGER) -> Decomposition:
    return decomposition_from_products(Shape(2, 2, 2), ring, WINOGRAD_PRODUCTS)


def standard(n: int, m: int, p: int, ring: Ring = INTEGER) -> Decomposition:
    return standard_decomposition(Shape(n, m, p), ring)


def data_names() -> list[str]:
    """Names of the decomposition files bundled in ``struxmm/data``."""
    root = resources.files("struxmm") / "data"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".dec"))


def load(name: str) -> Decomposition:
    """A named scheme: ``strassen``, ``winograd``, ``standard-n-m-p`` or a bundled file."""
    if name == "strassen":
        return strassen()
    if name == "winograd":
        return winograd()
    if name.startswith("standard-"):
        n, m, p = (int(x) for x in name.split("-")[1:])
        return standard(n, m, p)
    path = resources.files("struxmm") / "data" / f"{name}.dec"
    return loads_decomposition(path.read_text())


def shipped() -> dict[str, Decomposition]:
    """Every scheme shipped as a named object (builders plus bundled files)."""
    out = {"strassen": strassen(), "winograd": winograd()}
    for name in data_names():
        out[name] = load(name)
    return out
