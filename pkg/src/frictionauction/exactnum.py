"""Exact arithmetic primitives: rationals and two-tier lexicographic scalars.

Everything the solver computes is exact.  Rationals are
:class:`fractions.Fraction` (arbitrary precision, always reduced, positive
denominator).  On top of them sits :class:`LexScalar`, a symbolic two-tier
value ``base + TINY * log(logarg)`` where ``TINY`` stands for an
arbitrarily small positive constant that is never materialized as a
number: comparisons are lexicographic (base first, then logarg), which
agrees with the numeric order for every sufficiently small ``TINY > 0``.

The second tier is stored multiplicatively (``logarg``) rather than as a
log value so that addition of scalars multiplies the log arguments and
every stored quantity stays rational; the log of a rational is usually
irrational, the product of two rationals never is.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

__all__ = [
    "Rat",
    "rat",
    "rat_str",
    "LexScalar",
    "LEX_ZERO",
    "LEX_ONE",
    "lex_from_slope",
    "lex_compare",
    "lex_sum",
]

#: The exact rational scalar used throughout the package.
Rat = Fraction

_RAT_RE = re.compile(r"^-?\d+(/\d+)?$|^-?\d*\.\d+$|^-?\d+\.\d*$")


def rat(value: Union[str, int, Fraction]) -> Fraction:
    """Parse a rational from ``"num/den"``, ``"num"`` or a decimal string.

    Decimal literals such as ``"1.6"`` are converted exactly (8/5), never
    through binary floating point.  Integers and Fractions pass through.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not _RAT_RE.match(text):
            raise ValueError(f"not a rational literal: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


def rat_str(value: Fraction) -> str:
    """Serialize a rational as ``"num/den"``, omitting ``/den`` for integers."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True, slots=True)
class LexScalar:
    """Exact two-tier scalar ``base + TINY * log(logarg)``.

    ``base`` is any rational and ``logarg`` a positive rational.  The total
    order is lexicographic: compare ``base`` first and, on ties, compare
    ``logarg`` (the logarithm is strictly increasing, so comparing the
    rational arguments is exact).  Addition adds bases and multiplies
    logargs; scalar multiplication is restricted to nonnegative integers,
    which is all a fully combinatorial algorithm needs.
    """

    base: Fraction
    logarg: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "base", Fraction(self.base))
        object.__setattr__(self, "logarg", Fraction(self.logarg))
        if self.logarg <= 0:
            raise ValueError(f"logarg must be positive, got {self.logarg}")

    # -- ring-ish operations -------------------------------------------------

    def __add__(self, other: "LexScalar") -> "LexScalar":
        return LexScalar(self.base + other.base, self.logarg * other.logarg)

    def __neg__(self) -> "LexScalar":
        return LexScalar(-self.base, 1 / self.logarg)

    def __sub__(self, other: "LexScalar") -> "LexScalar":
        return LexScalar(self.base - other.base, self.logarg / other.logarg)

    def scaled(self, k: int) -> "LexScalar":
        """Multiply by a nonnegative integer: ``(k*base, logarg**k)``."""
        if not isinstance(k, int):
            raise TypeError("LexScalar scaling expects an integer")
        if k < 0:
            raise ValueError("LexScalar scaling expects a nonnegative integer")
        return LexScalar(self.base * k, self.logarg**k)

    # -- total order ----------------------------------------------------------

    def _key(self) -> tuple[Fraction, Fraction]:
        return (self.base, self.logarg)

    def __lt__(self, other: "LexScalar") -> bool:
        return self._key() < other._key()

    def __le__(self, other: "LexScalar") -> bool:
        return self._key() <= other._key()

    def __gt__(self, other: "LexScalar") -> bool:
        return self._key() > other._key()

    def __ge__(self, other: "LexScalar") -> bool:
        return self._key() >= other._key()

    def is_zero(self) -> bool:
        return self.base == 0 and self.logarg == 1

    def is_positive(self) -> bool:
        return self > LEX_ZERO

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {"base": rat_str(self.base), "logarg": rat_str(self.logarg)}

    @classmethod
    def from_json(cls, data: dict) -> "LexScalar":
        return cls(rat(data["base"]), rat(data["logarg"]))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"LexScalar({rat_str(self.base)}, {rat_str(self.logarg)})"


LEX_ZERO = LexScalar(Fraction(0), Fraction(1))
LEX_ONE = LexScalar(Fraction(1), Fraction(1))


def lex_from_slope(q_prime: Fraction) -> LexScalar:
    """Weight of one unit priced at marginal payment ``q_prime``.

    The weight is ``1 - TINY * log(q_prime)``, i.e. ``(1, 1/q_prime)``: a
    unit always counts 1 in the primary tier, and cheaper marginal payments
    are preferred in the secondary tier.
    """
    q_prime = Fraction(q_prime)
    if q_prime <= 0:
        raise ValueError(f"slope must be positive, got {q_prime}")
    return LexScalar(Fraction(1), 1 / q_prime)


def lex_compare(x: LexScalar, y: LexScalar) -> int:
    """Three-way comparison; returns -1, 0 or 1."""
    if x._key() < y._key():
        return -1
    if x._key() > y._key():
        return 1
    return 0


def lex_sum(items: Iterable[LexScalar]) -> LexScalar:
    """Sum of LexScalars; the empty sum is the zero scalar ``(0, 1)``."""
    total = LEX_ZERO
    for item in items:
        total = total + item
    return total
