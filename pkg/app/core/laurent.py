"""
app/core/laurent.py - Laurent polynomials over F2

Coefficients are packed into a Python int (bit k holds the coefficient of
z^(low + k)); multiplication is carry-less.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Tuple


def _clmul(a: int, b: int) -> int:
    out = 0
    while a:
        if a & 1:
            out ^= b
        b <<= 1
        a >>= 1
    return out


@dataclass(frozen=True)
class LaurentPolyF2:
    bits: int = 0
    low: int = 0

    def __post_init__(self) -> None:
        bits, low = int(self.bits), int(self.low)
        if bits < 0:
            raise ValueError("coefficient bits must be non-negative")
        if bits == 0:
            low = 0
        else:
            trailing = (bits & -bits).bit_length() - 1
            bits >>= trailing
            low += trailing
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "low", low)

    @classmethod
    def monomial(cls, k: int) -> "LaurentPolyF2":
        return cls(1, k)

    @classmethod
    def from_exponents(cls, exponents: Iterable[int]) -> "LaurentPolyF2":
        exps = list(exponents)
        if not exps:
            return cls()
        low = min(exps)
        bits = 0
        for e in exps:
            bits ^= 1 << (e - low)
        return cls(bits, low)

    @property
    def is_zero(self) -> bool:
        return self.bits == 0

    @property
    def high(self) -> int:
        return self.low + self.bits.bit_length() - 1

    def exponents(self) -> List[int]:
        return [self.low + k for k in range(self.bits.bit_length()) if (self.bits >> k) & 1]

    def monomial_degree(self) -> int | None:
        """k if the polynomial is exactly z^k, otherwise None."""
        return self.low if self.bits == 1 else None

    def __add__(self, other: "LaurentPolyF2") -> "LaurentPolyF2":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        low = min(self.low, other.low)
        return LaurentPolyF2(
            (self.bits << (self.low - low)) ^ (other.bits << (other.low - low)), low
        )

    __sub__ = __add__

    def __mul__(self, other: "LaurentPolyF2") -> "LaurentPolyF2":
        if self.is_zero or other.is_zero:
            return LaurentPolyF2()
        return LaurentPolyF2(_clmul(self.bits, other.bits), self.low + other.low)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        terms = []
        for e in self.exponents():
            terms.append("1" if e == 0 else ("z" if e == 1 else f"z^{e}"))
        return " + ".join(terms)

    def to_dict(self):
        return {"exponents": self.exponents()}


ZERO = LaurentPolyF2()
ONE = LaurentPolyF2.monomial(0)


@dataclass(frozen=True)
class PolyMatrixF2:
    """2x2 matrix [[a, b], [c, d]] of Laurent polynomials over F2."""

    a: LaurentPolyF2
    b: LaurentPolyF2
    c: LaurentPolyF2
    d: LaurentPolyF2

    def rows(
        self,
    ) -> Tuple[Tuple[LaurentPolyF2, LaurentPolyF2], Tuple[LaurentPolyF2, LaurentPolyF2]]:
        return (self.a, self.b), (self.c, self.d)

    def det(self) -> LaurentPolyF2:
        # signs vanish over F2
        return self.a * self.d + self.b * self.c

    def __matmul__(self, other: "PolyMatrixF2") -> "PolyMatrixF2":
        return PolyMatrixF2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def to_dict(self):
        return {"entries": [[str(p) for p in row] for row in self.rows()], "det": str(self.det())}
