"""Exact rational scalars.

``fractions.Fraction`` already keeps a positive denominator in lowest terms,
so it is used directly as the scalar type; this module only adds parsing and
the canonical ``"n/d"`` string form used on every JSON/CSV surface.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]


def q(value: RationalLike) -> Fraction:
    """Coerce ``value`` to a Fraction.

    Floats are rejected: every algebra routine is exact, and a silently
    rounded binary64 input would make equality checks meaningless.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational string")
        return Fraction(text)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def qs(values: Iterable[RationalLike]) -> tuple[Fraction, ...]:
    return tuple(q(v) for v in values)


def fmt(value: Fraction) -> str:
    """Canonical string: ``"n"`` when the denominator is 1, else ``"n/d"``."""
    value = q(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def fmts(values: Iterable[Fraction]) -> list[str]:
    return [fmt(v) for v in values]
