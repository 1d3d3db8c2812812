"""Near-algebra and double-near-algebra contracts, law checking, null elements.

Only the left-sided laws are part of the contract: a near algebra is
associative, left-distributive and left-homogeneous.  Nothing here may rely
on right distributivity or right homogeneity (``0 * x`` need not be ``0``).
"""

from __future__ import annotations

import itertools
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Generic, Iterable, Sequence, TypeVar

from .errors import NotInvertible
from .rational import RationalLike, fmt, q

E = TypeVar("E", bound="Vector")

DEFAULT_SCALARS = (Fraction(0), Fraction(1), Fraction(-2, 3))


class Vector:
    """Mixin giving immutable coordinate-backed elements their linear structure.

    Subclasses provide ``coords()`` (a flat tuple of Fractions) and
    ``with_coords(flat)``.
    """

    __slots__ = ()

    def coords(self) -> tuple[Fraction, ...]:
        raise NotImplementedError

    def with_coords(self: E, flat: Sequence[Fraction]) -> E:
        raise NotImplementedError

    def __add__(self: E, other: E) -> E:
        if type(other) is not type(self):
            return NotImplemented
        a, b = self.coords(), other.coords()
        if len(a) != len(b):
            from .errors import DimensionMismatch

            raise DimensionMismatch(f"cannot add elements of sizes {len(a)} and {len(b)}")
        return self.with_coords([x + y for x, y in zip(a, b)])

    def __sub__(self: E, other: E) -> E:
        if type(other) is not type(self):
            return NotImplemented
        a, b = self.coords(), other.coords()
        if len(a) != len(b):
            from .errors import DimensionMismatch

            raise DimensionMismatch(f"cannot subtract elements of sizes {len(a)} and {len(b)}")
        return self.with_coords([x - y for x, y in zip(a, b)])

    def __neg__(self: E) -> E:
        return self.with_coords([-x for x in self.coords()])

    def __mul__(self: E, scalar: RationalLike) -> E:
        c = q(scalar)
        return self.with_coords([c * x for x in self.coords()])

    __rmul__ = __mul__

    def __truediv__(self: E, scalar: RationalLike) -> E:
        c = q(scalar)
        return self.with_coords([x / c for x in self.coords()])

    def is_zero(self) -> bool:
        return not any(self.coords())


class Side(str, Enum):
    """Which multiplication of a DNA: ``L`` is ⋉ (ltimes), ``R`` is ⋊ (rtimes)."""

    L = "ltimes"
    R = "rtimes"

    @classmethod
    def parse(cls, value: "Side | str") -> "Side":
        if isinstance(value, Side):
            return value
        aliases = {"l": cls.L, "ltimes": cls.L, "left": cls.L, "r": cls.R, "rtimes": cls.R, "right": cls.R}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown side {value!r}") from None


class NearAlgebra(ABC, Generic[E]):
    """A linear space over Q with one associative, left-linear product."""

    name = "near-algebra"

    @property
    @abstractmethod
    def zero(self) -> E: ...

    @property
    @abstractmethod
    def identity(self) -> E: ...

    @abstractmethod
    def mul(self, a: E, b: E) -> E: ...

    @abstractmethod
    def try_inverse(self, a: E) -> E | None: ...

    def inverse(self, a: E) -> E:
        inv = self.try_inverse(a)
        if inv is None:
            raise NotInvertible(f"{self.name}: element has no inverse", what="x")
        return inv

    def sample(self, rng: random.Random) -> E:
        raise NotImplementedError


class DoubleNearAlgebra(ABC, Generic[E]):
    """Two near-algebra products ⋉ and ⋊ whose identities are cross-null."""

    name = "dna"

    @property
    @abstractmethod
    def zero(self) -> E: ...

    @abstractmethod
    def identity(self, side: Side) -> E: ...

    @abstractmethod
    def mul(self, side: Side, a: E, b: E) -> E: ...

    @abstractmethod
    def try_inverse(self, side: Side, a: E) -> E | None: ...

    @property
    def id_l(self) -> E:
        return self.identity(Side.L)

    @property
    def id_r(self) -> E:
        return self.identity(Side.R)

    def mul_l(self, a: E, b: E) -> E:
        return self.mul(Side.L, a, b)

    def mul_r(self, a: E, b: E) -> E:
        return self.mul(Side.R, a, b)

    def is_invertible(self, side: Side, a: E) -> bool:
        return self.try_inverse(side, a) is not None

    def inverse(self, side: Side, a: E, what: str = "x") -> E:
        inv = self.try_inverse(side, a)
        if inv is None:
            raise NotInvertible(f"{self.name}: {what} is not {side.value}-invertible", what=what)
        return inv

    def inv_l(self, a: E, what: str = "x") -> E:
        return self.inverse(Side.L, a, what)

    def inv_r(self, a: E, what: str = "x") -> E:
        return self.inverse(Side.R, a, what)

    def view(self, side: Side | str) -> "SideView[E]":
        return SideView(self, Side.parse(side))

    def sample(self, rng: random.Random) -> E:
        raise NotImplementedError

    def element_from_json(self, data: Any) -> E:
        raise NotImplementedError

    def element_to_json(self, a: E) -> Any:
        raise NotImplementedError


@dataclass(frozen=True)
class SideView(NearAlgebra[E]):
    """One multiplication of a DNA seen as a plain near algebra."""

    dna: DoubleNearAlgebra[E]
    side: Side

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"{self.dna.name}[{self.side.value}]"

    @property
    def zero(self) -> E:
        return self.dna.zero

    @property
    def identity(self) -> E:
        return self.dna.identity(self.side)

    def mul(self, a: E, b: E) -> E:
        return self.dna.mul(self.side, a, b)

    def try_inverse(self, a: E) -> E | None:
        return self.dna.try_inverse(self.side, a)


def as_near(algebra: NearAlgebra | DoubleNearAlgebra, side: Side | str | None = None) -> NearAlgebra:
    if isinstance(algebra, DoubleNearAlgebra):
        if side is None:
            raise ValueError("a DNA needs an explicit side")
        return algebra.view(side)
    return algebra


# --------------------------------------------------------------------------
# law checking


@dataclass
class Violation:
    law: str
    witness: dict[str, Any]
    lhs: Any
    rhs: Any
    side: str | None = None

    def to_json(self, encode=None) -> dict[str, Any]:
        if encode is None:
            from .jsonio import encode
        return {
            "law": self.law,
            "side": self.side,
            "witness": {k: (fmt(v) if isinstance(v, Fraction) else encode(v)) for k, v in self.witness.items()},
            "lhs": encode(self.lhs),
            "rhs": encode(self.rhs),
        }


@dataclass
class LawReport:
    checks: dict[str, bool] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def record(self, law: str, passed: bool, violation: Violation | None = None) -> None:
        self.counts[law] = self.counts.get(law, 0) + 1
        already_failed = self.checks.get(law) is False
        self.checks[law] = self.checks.get(law, True) and passed
        # one witness per law keeps reports small and replayable
        if not passed and not already_failed and violation is not None:
            self.violations.append(violation)

    def failed(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]

    def merge(self, other: "LawReport") -> "LawReport":
        for law, passed in other.checks.items():
            self.checks[law] = self.checks.get(law, True) and passed
            self.counts[law] = self.counts.get(law, 0) + other.counts.get(law, 0)
        self.violations.extend(other.violations)
        return self

    def to_json(self, encode=None) -> dict[str, Any]:
        if encode is None:
            from .jsonio import encode
        return {
            "pass": self.ok,
            "checks": dict(sorted(self.checks.items())),
            "counts": dict(sorted(self.counts.items())),
            "violations": [v.to_json(encode) for v in self.violations],
        }


def index_triples(n: int, max_triples: int | None = None) -> list[tuple[int, int, int]]:
    """All ordered index triples, or a deterministic cover of at most ``max_triples``.

    The cover puts every index in every position at least once.
    """
    total = n**3
    if max_triples is None or total <= max_triples:
        return list(itertools.product(range(n), repeat=3))
    rng = random.Random(n * 1_000_003 + max_triples)
    per = max(1, max_triples // (3 * n))
    out: list[tuple[int, int, int]] = []
    for i in range(n):
        for _ in range(per):
            a, b = rng.randrange(n), rng.randrange(n)
            out.extend([(i, a, b), (a, i, b), (a, b, i)])
    return out


def _check_near(report: LawReport, alg: NearAlgebra, samples: Sequence, scalars, triples, side) -> None:
    label = None if side is None else side.value
    mul = alg.mul
    e = alg.identity
    for x in samples:
        lhs, rhs = mul(x, e), mul(e, x)
        report.record(
            "identity",
            lhs == x and rhs == x,
            Violation("identity", {"x": x}, lhs, rhs if lhs == x else x, label),
        )
    for i, j, k in triples:
        x, y, z = samples[i], samples[j], samples[k]
        lhs, rhs = mul(mul(x, y), z), mul(x, mul(y, z))
        report.record("associativity", lhs == rhs, Violation("associativity", {"x": x, "y": y, "z": z}, lhs, rhs, label))
        lhs, rhs = mul(x, y + z), mul(x, y) + mul(x, z)
        report.record(
            "left_distributivity", lhs == rhs, Violation("left_distributivity", {"x": x, "y": y, "z": z}, lhs, rhs, label)
        )
    seen = set()
    for i, j, _ in triples:
        if (i, j) in seen:
            continue
        seen.add((i, j))
        x, y = samples[i], samples[j]
        xy = mul(x, y)
        for lam in scalars:
            lhs, rhs = mul(x, y * lam), xy * lam
            report.record(
                "left_homogeneity",
                lhs == rhs,
                Violation("left_homogeneity", {"x": x, "y": y, "lambda": lam}, lhs, rhs, label),
            )


def check_laws(
    algebra: NearAlgebra | DoubleNearAlgebra,
    samples: Sequence,
    scalars: Iterable[RationalLike] = DEFAULT_SCALARS,
    max_triples: int | None = None,
) -> LawReport:
    """Check the near-algebra laws (and, for a DNA, the cross-null identities).

    Law names are prefixed by the side for a DNA (``ltimes.associativity``).
    """
    if not samples:
        raise ValueError("samples must be nonempty")
    samples = list(samples)
    scalars = [q(c) for c in scalars]
    triples = index_triples(len(samples), max_triples)
    if not isinstance(algebra, DoubleNearAlgebra):
        report = LawReport()
        _check_near(report, algebra, samples, scalars, triples, None)
        return report

    report = LawReport()
    for side in (Side.L, Side.R):
        sub = LawReport()
        _check_near(sub, algebra.view(side), samples, scalars, triples, side)
        for law, passed in sub.checks.items():
            report.checks[f"{side.value}.{law}"] = passed
            report.counts[f"{side.value}.{law}"] = sub.counts[law]
        report.violations.extend(sub.violations)
    e_l, e_r = algebra.id_l, algebra.id_r
    for x in samples:
        got = algebra.mul_r(x, e_l)
        report.record("cross_null.rtimes_e_ltimes", got == e_l, Violation("cross_null.rtimes_e_ltimes", {"x": x}, got, e_l))
        got = algebra.mul_l(x, e_r)
        report.record("cross_null.ltimes_e_rtimes", got == e_r, Violation("cross_null.ltimes_e_rtimes", {"x": x}, got, e_r))
    return report


# --------------------------------------------------------------------------
# null elements and the two inverse identities


def is_null(algebra, f, probes: Sequence, side: Side | str | None = None) -> bool:
    """True iff ``probe · f == f`` for every probe."""
    if not probes:
        raise ValueError("probes must be nonempty")
    alg = as_near(algebra, side)
    return all(alg.mul(p, f) == f for p in probes)


def inverse_of_sum_with_null(algebra, x, f, side: Side | str | None = None):
    """``(x + f)^{-1}`` computed as ``(e - f) · x^{-1}`` for a null ``f``."""
    alg = as_near(algebra, side)
    x_inv = alg.inverse(x)
    return alg.mul(alg.identity - f, x_inv)


def balanced_combination(algebra, x, alpha: RationalLike, beta: RationalLike, gamma: RationalLike, f, side=None):
    """Evaluate ``β(αx+βe+γf)^{-1} + α(βx^{-1}+αe+γf)^{-1} + γf``.

    For invertible ``x`` and null ``f`` this equals the identity; the value is
    returned rather than assumed so callers can check it.
    """
    alg = as_near(algebra, side)
    a, b, c = q(alpha), q(beta), q(gamma)
    e = alg.identity
    x_inv = alg.inverse(x)
    first = x * a + e * b + f * c
    second = x_inv * b + e * a + f * c
    first_inv = alg.try_inverse(first)
    second_inv = alg.try_inverse(second)
    if first_inv is None or second_inv is None:
        bad = "alpha*x+beta*e+gamma*f" if first_inv is None else "beta*x^-1+alpha*e+gamma*f"
        raise NotInvertible(f"{alg.name}: {bad} is not invertible", what=bad)
    return first_inv * b + second_inv * a + f * c
