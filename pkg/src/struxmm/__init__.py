"""Structured tensor decompositions for fast matrix multiplication."""

from .rings import INTEGER, Z2, Ring, zmod2k
from .tensor import (
    Decomposition,
    RankOneTerm,
    Shape,
    cyclic_permute,
    direct_sum,
    kronecker_product,
    reduce_mod,
    standard_decomposition,
    transpose_permute,
    verify,
)

__version__ = "0.1.0"
