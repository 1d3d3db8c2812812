"""The DNA of endomorphism pairs over Q^d and its closed-form two-way flows.

Products on pairs ``A = (A1, A2)``::

    A ⋉ B = (B1 + A1 B2, A2 B2)        e_⋉ = (0, Id)
    A ⋊ B = (A1 B1, A2 B1 + B2)        e_⋊ = (Id, 0)

The single-product near algebra of endomorphism pairs is the ⋊ half of this
DNA (``EndoPairDna(d).view("rtimes")``).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping

from . import matrices as mx
from .core import DoubleNearAlgebra, Side, Vector
from .errors import DimensionMismatch, DomainError, NotInvertible
from .matrices import Matrix
from .rational import RationalLike, fmt, q


@dataclass(frozen=True)
class EndoPair(Vector):
    a1: Matrix
    a2: Matrix

    def __post_init__(self) -> None:
        a1, a2 = mx.matrix(self.a1), mx.matrix(self.a2)
        if len(a1) != len(a2):
            raise DimensionMismatch("both coordinates must have the same dimension")
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @property
    def dim(self) -> int:
        return len(self.a1)

    def coords(self) -> tuple[Fraction, ...]:
        return tuple(x for row in self.a1 for x in row) + tuple(x for row in self.a2 for x in row)

    def with_coords(self, flat) -> "EndoPair":
        n = self.dim
        flat = list(flat)
        a1 = [flat[i * n : (i + 1) * n] for i in range(n)]
        a2 = [flat[n * n + i * n : n * n + (i + 1) * n] for i in range(n)]
        return EndoPair(a1, a2)

    def to_json(self) -> dict[str, Any]:
        return {"a1": mx.to_json(self.a1), "a2": mx.to_json(self.a2)}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "EndoPair":
        if "a1" in data:
            return cls(data["a1"], data["a2"])
        # generator spelling h = (G, H)
        return cls(data["G"], data["H"])


def _same_dim(a: EndoPair, b: EndoPair) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"endomorphism pairs of dimension {a.dim} and {b.dim}")


def ep_mul(side: Side | str, a: EndoPair, b: EndoPair) -> EndoPair:
    side = Side.parse(side)
    _same_dim(a, b)
    if side is Side.L:
        return EndoPair(mx.add(b.a1, mx.matmul(a.a1, b.a2)), mx.matmul(a.a2, b.a2))
    return EndoPair(mx.matmul(a.a1, b.a1), mx.add(mx.matmul(a.a2, b.a1), b.a2))


def ep_inv(side: Side | str, a: EndoPair) -> EndoPair:
    side = Side.parse(side)
    if side is Side.L:
        a2_inv = mx.inverse(a.a2, name="A2")
        return EndoPair(mx.scale(-1, mx.matmul(a.a1, a2_inv)), a2_inv)
    a1_inv = mx.inverse(a.a1, name="A1")
    return EndoPair(a1_inv, mx.scale(-1, mx.matmul(a.a2, a1_inv)))


class EndoPairDna(DoubleNearAlgebra[EndoPair]):
    def __init__(self, dim: int = 2):
        if dim < 1:
            raise DimensionMismatch("dimension must be >= 1")
        self.dim = dim
        self.name = f"endo(d={dim})"

    @property
    def zero(self) -> EndoPair:
        z = mx.zeros(self.dim)
        return EndoPair(z, z)

    def identity(self, side: Side) -> EndoPair:
        i, z = mx.eye(self.dim), mx.zeros(self.dim)
        return EndoPair(z, i) if Side.parse(side) is Side.L else EndoPair(i, z)

    def mul(self, side: Side, a: EndoPair, b: EndoPair) -> EndoPair:
        return ep_mul(side, a, b)

    def try_inverse(self, side: Side, a: EndoPair) -> EndoPair | None:
        try:
            return ep_inv(side, a)
        except NotInvertible:
            return None

    def sample(self, rng: random.Random) -> EndoPair:
        return EndoPair(_rand_matrix(rng, self.dim), _rand_matrix(rng, self.dim))

    def element_from_json(self, data) -> EndoPair:
        a = EndoPair.from_json(data)
        if a.dim != self.dim:
            raise DimensionMismatch(f"expected dimension {self.dim}, got {a.dim}")
        return a

    def element_to_json(self, a: EndoPair) -> dict[str, Any]:
        return a.to_json()

    def invertibility_det(self, side: Side, a: EndoPair) -> Fraction:
        """Polynomial in the coordinates that vanishes iff ``a`` is not invertible."""
        return mx.det(a.a2 if Side.parse(side) is Side.L else a.a1)


def _rand_matrix(rng: random.Random, n: int, span: int = 4, den: int = 3) -> Matrix:
    return mx.matrix([[Fraction(rng.randint(-span, span), rng.randint(1, den)) for _ in range(n)] for _ in range(n)])


# --------------------------------------------------------------------------
# closed-form two-way flows


def _check_rsu(r: Fraction, s: Fraction, u: Fraction) -> None:
    if not 0 <= r < s < u:
        raise DomainError(f"need 0 <= r < s < u, got r={fmt(r)}, s={fmt(s)}, u={fmt(u)}")


def ep_two_way_flow(G: Matrix, H: Matrix, r: RationalLike, s: RationalLike, u: RationalLike) -> EndoPair:
    """Two-way flow generated by ``h = (G, H)``, from the matrix closed form.

    ``x_sru = ((u-s)/(u-r) B_ru^{-1} B_su, (s-r)/(u-r) B_ur^{-1} B_sr)`` with
    ``B_ab = (1-a)(1-b)H + ab H_b G H_b^{-1} + Id`` and ``H_b = (1-b)H + Id``.
    """
    G, H = mx.matrix(G), mx.matrix(H)
    if len(G) != len(H):
        raise DimensionMismatch("G and H must have the same dimension")
    r, s, u = q(r), q(s), q(u)
    _check_rsu(r, s, u)
    n = len(G)
    ident = mx.eye(n)
    h_inv_cache: dict[Fraction, tuple[Matrix, Matrix]] = {}

    def h_pair(b: Fraction) -> tuple[Matrix, Matrix]:
        if b not in h_inv_cache:
            hb = mx.add(mx.scale(1 - b, H), ident)
            h_inv_cache[b] = (hb, mx.inverse(hb, name=f"H_{fmt(b)}"))
        return h_inv_cache[b]

    def B(a: Fraction, b: Fraction) -> Matrix:
        hb, hb_inv = h_pair(b)
        conj = mx.matmul(mx.matmul(hb, G), hb_inv)
        return mx.lincomb(((1 - a) * (1 - b), H), (a * b, conj), (1, ident))

    b_ru_inv = mx.inverse(B(r, u), name=f"B_({fmt(r)},{fmt(u)})")
    b_ur_inv = mx.inverse(B(u, r), name=f"B_({fmt(u)},{fmt(r)})")
    first = mx.scale((u - s) / (u - r), mx.matmul(b_ru_inv, B(s, u)))
    second = mx.scale((s - r) / (u - r), mx.matmul(b_ur_inv, B(s, r)))
    return EndoPair(first, second)


def ep_one_way_flow(G: Matrix, H: Matrix, s: RationalLike, t: RationalLike) -> EndoPair:
    """One-way flow of the ⋊ near algebra for ``h = (H, G)``.

    ``x_st = ((Id + tH)(Id + sH)^{-1}, (t - s) G (Id + sH)^{-1})``.
    """
    G, H = mx.matrix(G), mx.matrix(H)
    s, t = q(s), q(t)
    if s < 0 or t <= s:
        raise DomainError(f"need 0 <= s < t, got s={fmt(s)}, t={fmt(t)}")
    ident = mx.eye(len(G))
    inv = mx.inverse(mx.add(ident, mx.scale(s, H)), name="Id+sH")
    return EndoPair(
        mx.matmul(mx.add(ident, mx.scale(t, H)), inv),
        mx.scale(t - s, mx.matmul(G, inv)),
    )


@dataclass(frozen=True)
class ScalarFlowParams:
    """Parameters ``α >= 0``, ``ρ in [0, 1]`` of the flows in span{e_⋊, e_⋉}."""

    alpha: Fraction
    rho: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", q(self.alpha))
        object.__setattr__(self, "rho", q(self.rho))
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {fmt(self.alpha)}")
        if not 0 <= self.rho <= 1:
            raise DomainError(f"rho must lie in [0, 1], got {fmt(self.rho)}")

    def b(self, s: RationalLike, u: RationalLike) -> Fraction:
        s, u = q(s), q(u)
        return self.alpha * s * u + self.rho * (s + u) + 1 - self.rho

    @property
    def generator(self) -> tuple[Fraction, Fraction]:
        """``(β, γ)`` of ``h = β e_⋊ + γ e_⋉``: ``γ = -ρ`` and ``β = α + ρ``."""
        return self.alpha + self.rho, -self.rho

    @classmethod
    def from_generator(cls, beta: RationalLike, gamma: RationalLike) -> "ScalarFlowParams":
        beta, gamma = q(beta), q(gamma)
        witness = scalar_generator_witness(beta, gamma)
        if witness is not None:
            raise DomainError(
                f"h = {fmt(beta)} e_rtimes + {fmt(gamma)} e_ltimes is not a flow generator: "
                f"b(r, s) = 0 at r={fmt(witness['r'])}, s={fmt(witness['s'])}"
            )
        return cls(beta + gamma, -gamma)


def generator_b(beta: RationalLike, gamma: RationalLike, r: RationalLike, s: RationalLike) -> Fraction:
    """``(1-r)(1-s)γ + rsβ + 1``; must stay nonzero for all ``0 <= r < s``."""
    beta, gamma, r, s = q(beta), q(gamma), q(r), q(s)
    return (1 - r) * (1 - s) * gamma + r * s * beta + 1


def scalar_generator_witness(beta: RationalLike, gamma: RationalLike) -> dict[str, Any] | None:
    """Exact rational ``(r, s)`` with ``0 <= r < s`` and ``b(r, s) = 0``, or None if admissible.

    ``b`` is bilinear in ``(r, s)``, so once a sign change is bracketed along
    a line of constant ``s`` the root is rational.
    """
    beta, gamma = q(beta), q(gamma)
    if gamma > 0 or gamma < -1:
        s = 1 + 1 / gamma
        return {"r": Fraction(0), "s": s, "bracket": None, "reason": "gamma outside [-1, 0]"}
    if beta + gamma >= 0:
        return None
    n = Fraction(1)
    while generator_b(beta, gamma, n, n + 1) > 0:
        n *= 2
    s1 = n + 1
    b0, b1 = generator_b(beta, gamma, 0, s1), generator_b(beta, gamma, n, s1)
    # b(0, s1) > 0 whenever gamma in [-1, 0] and s1 > 0
    r_star = n * b0 / (b0 - b1)
    return {
        "r": r_star,
        "s": s1,
        "bracket": [[Fraction(0), s1], [n, s1]],
        "reason": "beta + gamma < 0",
    }


def scalar_flow(p: ScalarFlowParams, r: RationalLike, s: RationalLike, u: RationalLike) -> tuple[Fraction, Fraction]:
    """Coefficients of ``e_⋊`` and ``e_⋉`` in the two-way flow of span{e_⋊, e_⋉}."""
    r, s, u = q(r), q(s), q(u)
    _check_rsu(r, s, u)
    den = (u - r) * p.b(r, u)
    return (u - s) * p.b(s, u) / den, (s - r) * p.b(r, s) / den
