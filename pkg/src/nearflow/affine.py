"""The near algebra Q x Q^d with ``(α,a)·(β,b) = (βα, βa + b)`` and its one-way flows.

The one-way flow helpers (``one_way_flow``, ``verify_one_way_flow``,
``recover_one_way_generator``) work in any near algebra; the ``aff_*``
functions are the affine specialisations with closed forms.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence

from .core import LawReport, NearAlgebra, Vector, Violation
from .errors import ConfigError, DimensionMismatch, DomainError, NotInvertible
from .rational import RationalLike, fmt, fmts, q, qs


@dataclass(frozen=True)
class AffineElem(Vector):
    alpha: Fraction
    vec: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", q(self.alpha))
        object.__setattr__(self, "vec", qs(self.vec))

    @property
    def dim(self) -> int:
        return len(self.vec)

    def coords(self) -> tuple[Fraction, ...]:
        return (self.alpha, *self.vec)

    def with_coords(self, flat) -> "AffineElem":
        return AffineElem(flat[0], tuple(flat[1:]))

    def is_invertible(self) -> bool:
        return self.alpha != 0

    def is_null(self) -> bool:
        """Analytic null predicate: every element with α = 0 is null."""
        return self.alpha == 0

    def to_json(self) -> dict[str, Any]:
        return {"alpha": fmt(self.alpha), "vec": fmts(self.vec)}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "AffineElem":
        extra = set(data) - {"alpha", "vec"}
        if extra or "alpha" not in data:
            raise ConfigError(f"affine element needs keys alpha, vec; got {sorted(data)}")
        return cls(q(data["alpha"]), qs(data.get("vec", ())))


def _check_dims(a: AffineElem, b: AffineElem) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"affine elements of dimension {a.dim} and {b.dim}")


def aff_mul(a: AffineElem, b: AffineElem) -> AffineElem:
    _check_dims(a, b)
    beta = b.alpha
    return AffineElem(beta * a.alpha, tuple(beta * x + y for x, y in zip(a.vec, b.vec)))


def aff_inv(a: AffineElem) -> AffineElem:
    if a.alpha == 0:
        raise NotInvertible("affine element with alpha = 0 is null, hence not invertible", what="alpha")
    inv = 1 / a.alpha
    return AffineElem(inv, tuple(-inv * x for x in a.vec))


class AffineAlgebra(NearAlgebra[AffineElem]):
    def __init__(self, dim: int = 1):
        if dim < 0:
            raise DimensionMismatch("dimension must be >= 0")
        self.dim = dim
        self.name = f"affine(d={dim})"

    @property
    def zero(self) -> AffineElem:
        return AffineElem(Fraction(0), (Fraction(0),) * self.dim)

    @property
    def identity(self) -> AffineElem:
        return AffineElem(Fraction(1), (Fraction(0),) * self.dim)

    def mul(self, a: AffineElem, b: AffineElem) -> AffineElem:
        return aff_mul(a, b)

    def try_inverse(self, a: AffineElem) -> AffineElem | None:
        return aff_inv(a) if a.alpha != 0 else None

    def element(self, alpha: RationalLike, *vec: RationalLike) -> AffineElem:
        if len(vec) != self.dim:
            raise DimensionMismatch(f"expected {self.dim} vector entries, got {len(vec)}")
        return AffineElem(q(alpha), qs(vec))

    def sample(self, rng: random.Random) -> AffineElem:
        return AffineElem(_rand_q(rng), tuple(_rand_q(rng) for _ in range(self.dim)))

    def element_from_json(self, data) -> AffineElem:
        a = AffineElem.from_json(data)
        if a.dim != self.dim:
            raise DimensionMismatch(f"expected dimension {self.dim}, got {a.dim}")
        return a

    def element_to_json(self, a: AffineElem) -> dict[str, Any]:
        return a.to_json()


def _rand_q(rng: random.Random, span: int = 6, den: int = 4) -> Fraction:
    return Fraction(rng.randint(-span, span), rng.randint(1, den))


# --------------------------------------------------------------------------
# one-way flows


@dataclass(frozen=True)
class AffineGenerator:
    """Generator ``h = (α, a)`` of a one-way flow; requires α >= 0."""

    alpha: Fraction
    vec: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", q(self.alpha))
        object.__setattr__(self, "vec", qs(self.vec))
        if self.alpha < 0:
            # e + s h = (1 + sα, s a) loses invertibility at s = -1/α
            raise DomainError(f"alpha={fmt(self.alpha)} < 0: e + s*h is singular at s={fmt(-1 / self.alpha)}")

    @property
    def element(self) -> AffineElem:
        return AffineElem(self.alpha, self.vec)

    @classmethod
    def from_elem(cls, h: AffineElem) -> "AffineGenerator":
        return cls(h.alpha, h.vec)


def _check_times(s: Fraction, t: Fraction) -> None:
    if s < 0 or t <= s:
        raise DomainError(f"need 0 <= s < t, got s={fmt(s)}, t={fmt(t)}")


def one_way_flow(alg: NearAlgebra, h, s: RationalLike, t: RationalLike):
    """``(e + s h)^{-1} · (e + t h)`` in any near algebra."""
    s, t = q(s), q(t)
    _check_times(s, t)
    e = alg.identity
    left = alg.try_inverse(e + h * s)
    if left is None:
        raise NotInvertible(f"e + s*h is not invertible at s={fmt(s)}", what="e+s*h", detail={"s": fmt(s)})
    return alg.mul(left, e + h * t)


def aff_one_way_flow(h: AffineGenerator, s: RationalLike, t: RationalLike) -> AffineElem:
    """Closed form ``((1+αt)/(1+αs), (t-s)/(1+αs) · a)``."""
    s, t = q(s), q(t)
    _check_times(s, t)
    den = 1 + h.alpha * s
    k = (t - s) / den
    return AffineElem((1 + h.alpha * t) / den, tuple(k * x for x in h.vec))


def recover_one_way_generator(alg: NearAlgebra, x0t, t: RationalLike):
    t = q(t)
    if t <= 0:
        raise DomainError(f"need t > 0, got {fmt(t)}")
    return (x0t - alg.identity) / t


def aff_recover_generator(x0t: AffineElem, t: RationalLike) -> AffineGenerator:
    h = recover_one_way_generator(AffineAlgebra(x0t.dim), x0t, t)
    return AffineGenerator(h.alpha, h.vec)


class OneWayFamily:
    """``(s, t) -> x_st``, backed by a generator or by an explicit table."""

    def __init__(
        self,
        alg: NearAlgebra,
        *,
        generator=None,
        table: Mapping[tuple[Fraction, Fraction], Any] | None = None,
        func: Callable[[Fraction, Fraction], Any] | None = None,
    ):
        if sum(x is not None for x in (generator, table, func)) != 1:
            raise ValueError("give exactly one of generator, table, func")
        self.alg = alg
        self.generator = generator
        self.table = None if table is None else {(q(s), q(t)): v for (s, t), v in table.items()}
        self.func = func

    def __call__(self, s: RationalLike, t: RationalLike):
        s, t = q(s), q(t)
        if self.generator is not None:
            return one_way_flow(self.alg, self.generator, s, t)
        if self.func is not None:
            return self.func(s, t)
        try:
            return self.table[(s, t)]
        except KeyError:
            raise DomainError(f"table has no entry for (s, t)=({fmt(s)}, {fmt(t)})") from None


def verify_one_way_flow(family: OneWayFamily, triples: Iterable[Sequence[RationalLike]]) -> LawReport:
    """Check ``x_st · x_tu = x_su`` and u-independence of ``(x_su - e)/(u - s)``."""
    alg = family.alg
    e = alg.identity
    report = LawReport()
    slopes: dict[Fraction, dict[Fraction, Any]] = {}
    for triple in triples:
        s, t, u = (q(v) for v in triple)
        if not 0 <= s < t < u:
            raise DomainError(f"need 0 <= s < t < u, got {fmt(s)}, {fmt(t)}, {fmt(u)}")
        try:
            x_st, x_tu, x_su = family(s, t), family(t, u), family(s, u)
        except (NotInvertible, ZeroDivisionError) as exc:
            report.record("invertibility", False, Violation("invertibility", {"s": s, "t": t, "u": u}, str(exc), None))
            continue
        for key, x in (((s, t), x_st), ((t, u), x_tu), ((s, u), x_su)):
            inv_ok = alg.try_inverse(x) is not None
            report.record("invertibility", inv_ok, Violation("invertibility", {"s": key[0], "t": key[1]}, x, None))
        lhs = alg.mul(x_st, x_tu)
        report.record("flow_equation", lhs == x_su, Violation("flow_equation", {"s": s, "t": t, "u": u}, lhs, x_su))
        for a, b, x in ((s, t, x_st), (s, u, x_su), (t, u, x_tu)):
            slopes.setdefault(a, {})[b] = (x - e) / (b - a)
    for s, by_u in sorted(slopes.items()):
        items = sorted(by_u.items())
        u0, ref = items[0]
        for u, val in items[1:]:
            report.record(
                "u_independence", val == ref, Violation("u_independence", {"s": s, "u1": u0, "u2": u}, ref, val)
            )
    return report


def aff_flow_verify(family: OneWayFamily, triples) -> LawReport:
    return verify_one_way_flow(family, triples)
