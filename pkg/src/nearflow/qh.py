"""The quadratic-harness DNA on Q^6 x Q^2.

Coordinates are kept in the fixed order ``(x1..x6; u1, u2)``; every
serialisation and every downstream coefficient formula relies on it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Sequence

from .core import DoubleNearAlgebra, Side, Vector
from .endo import scalar_generator_witness
from .errors import DimensionMismatch, NotInvertible
from .rational import RationalLike, fmts, qs


@dataclass(frozen=True)
class QhElem(Vector):
    x: tuple[Fraction, ...]
    u: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        x, u = qs(self.x), qs(self.u)
        if len(x) != 6 or len(u) != 2:
            raise DimensionMismatch(f"QhElem needs 6 + 2 coordinates, got {len(x)} + {len(u)}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)

    @classmethod
    def _trusted(cls, x: tuple[Fraction, ...], u: tuple[Fraction, ...]) -> "QhElem":
        # internal results are already Fractions of the right length
        obj = object.__new__(cls)
        object.__setattr__(obj, "x", x)
        object.__setattr__(obj, "u", u)
        return obj

    @classmethod
    def of(cls, *flat: RationalLike) -> "QhElem":
        if len(flat) != 8:
            raise DimensionMismatch(f"expected 8 coordinates, got {len(flat)}")
        return cls(flat[:6], flat[6:])

    def coords(self) -> tuple[Fraction, ...]:
        return self.x + self.u

    def with_coords(self, flat: Sequence[Fraction]) -> "QhElem":
        if len(flat) != 8:
            raise DimensionMismatch(f"expected 8 coordinates, got {len(flat)}")
        return QhElem._trusted(tuple(flat[:6]), tuple(flat[6:]))

    def to_json(self) -> dict[str, Any]:
        return {"x": fmts(self.x), "u": fmts(self.u)}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "QhElem":
        return cls(qs(data["x"]), qs(data["u"]))


E_LTIMES = QhElem.of(0, 0, 1, 0, 0, 0, 0, 1)
E_RTIMES = QhElem.of(1, 0, 0, 0, 0, 0, 1, 0)


def qh_mul(side: Side | str, a: QhElem, b: QhElem) -> QhElem:
    x1, x2, x3, x4, x5, x6 = a.x
    u1, u2 = a.u
    y1, y2, y3, y4, y5, y6 = b.x
    v1, v2 = b.u
    if Side.parse(side) is Side.R:
        return QhElem._trusted(
            (
                x1 * y1,
                x2 * y1 + u1 * y2,
                x3 * y1 + u2 * y2 + y3,
                x4 * y1 + u1 * y4,
                x5 * y1 + u2 * y4 + y5,
                x6 * y1 + y6,
            ),
            (u1 * v1, u2 * v1 + v2),
        )
    return QhElem._trusted(
        (
            y1 + u1 * y2 + x1 * y3,
            u2 * y2 + x2 * y3,
            x3 * y3,
            x4 * y3 + y4 + u1 * y5,
            x5 * y3 + u2 * y5,
            x6 * y3 + y6,
        ),
        (v1 + u1 * v2, u2 * v2),
    )


def qh_inv(side: Side | str, a: QhElem) -> QhElem:
    x1, x2, x3, x4, x5, x6 = a.x
    u1, u2 = a.u
    if Side.parse(side) is Side.L:
        zeros = [name for name, v in (("x3", x3), ("u2", u2)) if v == 0]
        if zeros:
            raise NotInvertible(f"ltimes-inverse needs x3 != 0 and u2 != 0; zero: {', '.join(zeros)}", what=",".join(zeros))
        d = x3 * u2
        return QhElem._trusted(
            ((x2 * u1 - x1 * u2) / d, -x2 / d, 1 / x3, (x5 * u1 - x4 * u2) / d, -x5 / d, -x6 / x3),
            (-u1 / u2, 1 / u2),
        )
    zeros = [name for name, v in (("x1", x1), ("u1", u1)) if v == 0]
    if zeros:
        raise NotInvertible(f"rtimes-inverse needs x1 != 0 and u1 != 0; zero: {', '.join(zeros)}", what=",".join(zeros))
    d = x1 * u1
    return QhElem._trusted(
        (1 / x1, -x2 / d, (x2 * u2 - x3 * u1) / d, -x4 / d, (x4 * u2 - x5 * u1) / d, -x6 / x1),
        (1 / u1, -u2 / u1),
    )


class QhDna(DoubleNearAlgebra[QhElem]):
    name = "qh"

    @property
    def zero(self) -> QhElem:
        return QhElem.of(*([0] * 8))

    def identity(self, side: Side) -> QhElem:
        return E_LTIMES if Side.parse(side) is Side.L else E_RTIMES

    def mul(self, side: Side, a: QhElem, b: QhElem) -> QhElem:
        return qh_mul(side, a, b)

    def try_inverse(self, side: Side, a: QhElem) -> QhElem | None:
        try:
            return qh_inv(side, a)
        except NotInvertible:
            return None

    def is_invertible(self, side: Side, a: QhElem) -> bool:
        if Side.parse(side) is Side.L:
            return a.x[2] != 0 and a.u[1] != 0
        return a.x[0] != 0 and a.u[0] != 0

    def sample(self, rng: random.Random) -> QhElem:
        return QhElem.of(*(Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(8)))

    def element_from_json(self, data) -> QhElem:
        return QhElem.from_json(data)

    def element_to_json(self, a: QhElem) -> dict[str, Any]:
        return a.to_json()

    def invertibility_det(self, side: Side, a: QhElem) -> Fraction:
        if Side.parse(side) is Side.L:
            return a.x[2] * a.u[1]
        return a.x[0] * a.u[0]

    def generator_prefilter(self, h: QhElem) -> dict[str, Any] | None:
        """Necessary condition on the lower coordinates ``(g1, g2)`` of a generator.

        They evolve like a generator of the scalar DNA, so ``g2 in [-1, 0]``
        and ``g1 + g2 >= 0`` are required. Not sufficient.
        """
        g1, g2 = h.u
        witness = scalar_generator_witness(g1, g2)
        if witness is None:
            return None
        return {"g1": g1, "g2": g2, **witness}
