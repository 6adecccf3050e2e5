"""Coefficient rings: Z2, Z/2^k and the integers."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Ring:
    """A coefficient ring.

    ``kind`` is ``"z2"``, ``"z2k"`` (integers modulo ``2**k``) or ``"int"``.
    Residues modulo ``2**k`` are kept in the symmetric range
    ``(-2**(k-1), 2**(k-1)]`` so that lifted coefficients read naturally.
    """

    kind: str
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("z2", "z2k", "int"):
            raise ValueError(f"unknown ring kind {self.kind!r}")
        if self.kind == "z2k" and self.k < 1:
            raise ValueError("z2k ring needs k >= 1")

    @property
    def modulus(self) -> int | None:
        if self.kind == "z2":
            return 2
        if self.kind == "z2k":
            return 1 << self.k
        return None

    def reduce(self, x: int) -> int:
        mod = self.modulus
        if mod is None:
            return int(x)
        if mod == 2:
            return int(x) & 1
        r = int(x) % mod
        if r > mod // 2:
            r -= mod
        return r

    @property
    def token(self) -> str:
        if self.kind == "z2":
            return "z2"
        if self.kind == "z2k":
            return f"z2^{self.k}"
        return "int"

    @classmethod
    def parse(cls, token: str) -> "Ring":
        token = token.strip().lower()
        if token == "z2":
            return Z2
        if token == "int":
            return INTEGER
        if token.startswith("z2^"):
            k = int(token[3:])
            return Z2 if k == 1 else cls("z2k", k)
        raise ValueError(f"unknown ring token {token!r}")

    def __str__(self):
        return self.token


Z2 = Ring("z2")
INTEGER = Ring("int")


def zmod2k(k: int) -> Ring:
    return Z2 if k == 1 else Ring("z2k", k)
