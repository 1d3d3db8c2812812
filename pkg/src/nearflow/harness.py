"""Regression and conditional-variance coefficients of (quadratic) harnesses.

Tables list coefficients of a quadratic polynomial in ``(X_r, X_u)`` in the
fixed order ``X_r^2, X_r X_u, X_u^2, X_r, X_u, 1`` (columns ``A..F``),
matching coordinates ``x1..x6`` of the Q DNA.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .affine import AffineElem, OneWayFamily, AffineAlgebra
from .errors import DegenerateDenominator, DomainError, InvalidParams
from .qh import QhElem
from .rational import RationalLike, fmt, q

CSV_COLUMNS = ("r", "s", "u", "A", "B", "C", "D", "E", "F", "a", "b")


def _sqrt_bound_ok(lhs: Fraction, offset: Fraction, prod: Fraction) -> bool:
    """``lhs <= offset + 2 sqrt(prod)`` without square roots (``prod >= 0``)."""
    gap = lhs - offset
    return gap <= 0 or gap * gap <= 4 * prod


def _rsu(r: RationalLike, s: RationalLike, u: RationalLike, strict_r: bool = False) -> tuple[Fraction, Fraction, Fraction]:
    r, s, u = q(r), q(s), q(u)
    lo_ok = r > 0 if strict_r else r >= 0
    if not (lo_ok and r < s < u):
        bound = "0 < r" if strict_r else "0 <= r"
        raise DomainError(f"need {bound} < s < u, got r={fmt(r)}, s={fmt(s)}, u={fmt(u)}")
    return r, s, u


# --------------------------------------------------------------------------
# parameter types


@dataclass(frozen=True)
class QhParams:
    theta: Fraction
    eta: Fraction
    sigma: Fraction
    tau: Fraction
    gamma: Fraction
    chi: Fraction

    def __post_init__(self) -> None:
        for name in ("theta", "eta", "sigma", "tau", "gamma", "chi"):
            object.__setattr__(self, name, q(getattr(self, name)))
        if self.chi not in (0, 1):
            raise InvalidParams(f"chi must be 0 or 1, got {fmt(self.chi)}")
        if self.sigma < 0 or self.tau < 0:
            raise InvalidParams("sigma and tau must be >= 0")
        if not _sqrt_bound_ok(self.gamma, self.chi, self.sigma * self.tau):
            raise InvalidParams(
                f"gamma={fmt(self.gamma)} exceeds chi + 2 sqrt(sigma tau) for sigma={fmt(self.sigma)}, tau={fmt(self.tau)}"
            )
        if not any((self.gamma, self.sigma, self.tau, self.chi)):
            raise InvalidParams("gamma, sigma, tau, chi must not all vanish")

    def raw(self) -> tuple[Fraction, ...]:
        """``(theta, eta, sigma, tau, gamma, chi)``."""
        return (self.theta, self.eta, self.sigma, self.tau, self.gamma, self.chi)

    def c(self, r: RationalLike, u: RationalLike) -> Fraction:
        return c_coeff(self.tau, self.sigma, self.gamma, self.chi, r, u)

    def to_json(self) -> dict[str, str]:
        return {k: fmt(v) for k, v in zip(("theta", "eta", "sigma", "tau", "gamma", "chi"), self.raw())}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "QhParams":
        missing = [k for k in ("sigma", "tau", "gamma", "chi") if k not in data]
        if missing:
            raise InvalidParams(f"missing parameters: {', '.join(missing)}")
        return cls(
            q(str(data.get("theta", "0"))),
            q(str(data.get("eta", "0"))),
            q(str(data["sigma"])),
            q(str(data["tau"])),
            q(str(data["gamma"])),
            q(str(data["chi"])),
        )


@dataclass(frozen=True)
class GeneratorParams6:
    alpha: Fraction
    beta: Fraction
    rho: Fraction
    h4: Fraction = Fraction(0)
    h5: Fraction = Fraction(0)
    h6: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "rho", "h4", "h5", "h6"):
            object.__setattr__(self, name, q(getattr(self, name)))
        if self.alpha < 0:
            raise InvalidParams(f"alpha must be >= 0, got {fmt(self.alpha)}")
        if not 0 <= self.rho <= 1:
            raise InvalidParams(f"rho must lie in [0, 1], got {fmt(self.rho)}")
        # beta >= -2 sqrt(alpha (1 - rho))
        if not _sqrt_bound_ok(-self.beta, Fraction(0), self.alpha * (1 - self.rho)):
            raise InvalidParams(f"beta={fmt(self.beta)} is below -2 sqrt(alpha (1 - rho))")

    def c(self, s: RationalLike, u: RationalLike) -> Fraction:
        s, u = q(s), q(u)
        return self.alpha * s * u + (self.beta - self.rho) * s + self.rho * u + 1 - self.rho

    def element(self) -> QhElem:
        """The Q-DNA generator with these parameters."""
        a, b, p = self.alpha, self.beta, self.rho
        return QhElem((a + b - p, 2 * p - b, -p, self.h4, self.h5, self.h6), (0, 0))

    def to_json(self) -> dict[str, str]:
        return {k: fmt(getattr(self, k)) for k in ("alpha", "beta", "rho", "h4", "h5", "h6")}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "GeneratorParams6":
        return cls(*(q(str(data.get(k, "0"))) for k in ("alpha", "beta", "rho", "h4", "h5", "h6")))


def c_coeff(tau, sigma, gamma, chi, r: RationalLike, u: RationalLike) -> Fraction:
    """``tau + sigma r u - gamma r + chi u``."""
    tau, sigma, gamma, chi, r, u = (q(v) for v in (tau, sigma, gamma, chi, r, u))
    return tau + sigma * r * u - gamma * r + chi * u


# --------------------------------------------------------------------------
# coefficient tables


@dataclass(frozen=True)
class QuadCoeffTable:
    r: Fraction
    s: Fraction
    u: Fraction
    A: Fraction
    B: Fraction
    C: Fraction
    D: Fraction
    E: Fraction
    F: Fraction
    a: Fraction
    b: Fraction

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return (self.A, self.B, self.C, self.D, self.E, self.F)

    def as_element(self) -> QhElem:
        return QhElem(self.coeffs, (self.a, self.b))

    @classmethod
    def from_element(cls, x: QhElem, r, s, u) -> "QuadCoeffTable":
        return cls(q(r), q(s), q(u), *x.x, *x.u)

    def row(self) -> list[str]:
        return [fmt(getattr(self, k)) for k in CSV_COLUMNS]

    def to_json(self) -> dict[str, str]:
        return dict(zip(CSV_COLUMNS, self.row()))


@dataclass(frozen=True)
class VarCoeffTable(QuadCoeffTable):
    """Conditional variance as a quadratic in ``(X_r, X_u)``; ``a, b`` are the mean weights."""


def tables_to_csv(tables: Iterable[QuadCoeffTable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for t in tables:
        writer.writerow(t.row())
    return buf.getvalue()


def _harness_weights(r: Fraction, s: Fraction, u: Fraction) -> tuple[Fraction, Fraction]:
    return (u - s) / (u - r), (s - r) / (u - r)


def generator_from_raw(theta, eta, sigma, tau, gamma, chi, phi=None) -> GeneratorParams6:
    """Generator parameters for any positive multiple of a parameter tuple.

    ``phi`` overrides the numerator of ``h6`` (defaults to ``chi``).
    """
    theta, eta, sigma, tau, gamma, chi = (q(v) for v in (theta, eta, sigma, tau, gamma, chi))
    phi = chi if phi is None else q(phi)
    d = chi + tau
    if d == 0:
        raise DomainError("chi + tau = 0: normalize with classify_and_normalize first")
    return GeneratorParams6(sigma / d, (chi - gamma) / d, chi / d, (eta - theta) / d, theta / d, phi / d)


def params_to_generator(p: QhParams) -> tuple[GeneratorParams6, QhElem]:
    g = generator_from_raw(*p.raw())
    return g, g.element()


def qh_regression_coeffs(g: GeneratorParams6, r: RationalLike, s: RationalLike, u: RationalLike) -> QuadCoeffTable:
    """Conditional second-moment table of the flow generated by ``g``."""
    r, s, u = _rsu(r, s, u)
    cru = g.c(r, u)
    if cru == 0:
        raise DegenerateDenominator(f"c(r, u) = 0 at r={fmt(r)}, u={fmt(u)}")
    den = (u - r) * cru
    k = (u - s) * (s - r)
    return QuadCoeffTable(
        r,
        s,
        u,
        (u - s) * g.c(s, u) / den,
        k * (2 * g.rho - g.beta) / den,
        (s - r) * g.c(r, s) / den,
        k * (g.h4 * u - g.h5 * (1 - u)) / den,
        k * (g.h5 * (1 - r) - g.h4 * r) / den,
        k * g.h6 / cru,
        *_harness_weights(r, s, u),
    )


def subtract_squared_mean(t: QuadCoeffTable) -> VarCoeffTable:
    """Second moment minus ``(a X_r + b X_u)^2``."""
    a, b = t.a, t.b
    return VarCoeffTable(t.r, t.s, t.u, t.A - a * a, t.B - 2 * a * b, t.C - b * b, t.D, t.E, t.F, a, b)


def conditional_variance_table(theta, eta, sigma, tau, gamma, chi, r, s, u) -> VarCoeffTable:
    """Direct expansion of ``(s-r)(u-s)/c(r,u) * Q(x, y)`` for arbitrary rational parameters.

    ``x = (X_u - X_r)/(u - r)``, ``y = (u X_r - r X_u)/(u - r)`` and
    ``Q(x, y) = tau x^2 + sigma y^2 + (gamma - chi) x y + theta x + eta y + chi``.
    """
    theta, eta, sigma, tau, gamma, chi = (q(v) for v in (theta, eta, sigma, tau, gamma, chi))
    r, s, u = _rsu(r, s, u)
    c = c_coeff(tau, sigma, gamma, chi, r, u)
    if c == 0:
        raise DegenerateDenominator(f"c(r, u) = 0 at r={fmt(r)}, u={fmt(u)}")
    d = u - r
    # linear forms as (coef of X_r, coef of X_u)
    x = (-1 / d, 1 / d)
    y = (u / d, -r / d)

    def sq(f, g):
        return (f[0] * g[0], f[0] * g[1] + f[1] * g[0], f[1] * g[1])

    rho = gamma - chi
    quad = [Fraction(0)] * 3
    for coef, f, g in ((tau, x, x), (sigma, y, y), (rho, x, y)):
        for i, v in enumerate(sq(f, g)):
            quad[i] += coef * v
    lin = (theta * x[0] + eta * y[0], theta * x[1] + eta * y[1])
    k = (s - r) * (u - s) / c
    return VarCoeffTable(
        r, s, u, k * quad[0], k * quad[1], k * quad[2], k * lin[0], k * lin[1], k * chi, *_harness_weights(r, s, u)
    )


def variance_coeffs(p: QhParams, r: RationalLike, s: RationalLike, u: RationalLike) -> VarCoeffTable:
    return conditional_variance_table(*p.raw(), r, s, u)


def variance_via_generator(p: QhParams, r: RationalLike, s: RationalLike, u: RationalLike) -> VarCoeffTable:
    g, _ = params_to_generator(p)
    return subtract_squared_mean(qh_regression_coeffs(g, r, s, u))


# --------------------------------------------------------------------------
# linear harness and one-sided second moments


def linear_harness_coeffs(
    kind: str, alpha: RationalLike, rho: RationalLike, r: RationalLike, s: RationalLike, u: RationalLike
) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """``(a_sru, b_sru, A_ru, B_ru)`` for the bounded or unbounded family."""
    if kind == "bounded":
        from .endo import ScalarFlowParams

        r, s, u = _rsu(r, s, u)
        p = ScalarFlowParams(q(alpha), q(rho))
        bru = p.b(r, u)
        a = (u - s) * p.b(s, u) / ((u - r) * bru)
        b = (s - r) * p.b(r, s) / ((u - r) * bru)
        return a, b, (p.alpha * u + p.rho) / bru, -(p.alpha * r + p.rho) / bru
    if kind == "unbounded":
        r, s, u = _rsu(r, s, u, strict_r=True)
        return s * (u - s) / (r * (u - r)), s * (s - r) / (u * (u - r)), 1 / r, -1 / u
    raise ValueError(f"kind must be 'bounded' or 'unbounded', got {kind!r}")


@dataclass(frozen=True)
class SecondMomentCoeffs:
    a_ts: Fraction
    b_ts: Fraction
    c_ts: Fraction

    def as_affine(self) -> AffineElem:
        return AffineElem(self.a_ts, (self.b_ts, self.c_ts))

    def to_json(self) -> dict[str, str]:
        return {"a_ts": fmt(self.a_ts), "b_ts": fmt(self.b_ts), "c_ts": fmt(self.c_ts)}


def second_moment_coeffs(case: str, a: RationalLike, b: RationalLike, t: RationalLike, s: RationalLike) -> SecondMomentCoeffs:
    """``E(X_t^2 | F_s) = a_ts X_s^2 + b_ts X_s + c_ts``."""
    a, b, t, s = q(a), q(b), q(t), q(s)
    if case == "bounded":
        if not 0 <= s < t:
            raise DomainError(f"need 0 <= s < t, got s={fmt(s)}, t={fmt(t)}")
        if a < 0:
            raise DomainError(f"need a >= 0, got {fmt(a)}")
        den = 1 + s * a
        return SecondMomentCoeffs((1 + t * a) / den, (t - s) * b / den, (t - s) / den)
    if case == "unbounded":
        if not 0 < s < t:
            raise DomainError(f"need 0 < s < t, got s={fmt(s)}, t={fmt(t)}")
        return SecondMomentCoeffs(t / s, (t - s) * b / s, Fraction(0))
    raise ValueError(f"case must be 'bounded' or 'unbounded', got {case!r}")


def second_moment_family(case: str, a: RationalLike, b: RationalLike) -> OneWayFamily:
    """The coefficients as a one-way flow ``(s, t) -> (a_ts, (b_ts, c_ts))`` in the affine algebra."""
    return OneWayFamily(AffineAlgebra(2), func=lambda s, t: second_moment_coeffs(case, a, b, t, s).as_affine())


# --------------------------------------------------------------------------
# shifts and normalization


@dataclass(frozen=True)
class ShiftedParams:
    """Starred parameters, listed in the invariant-vector order ``(sigma, tau, gamma, eta, theta, chi)``."""

    sigma: Fraction
    tau: Fraction
    gamma: Fraction
    eta: Fraction
    theta: Fraction
    chi: Fraction

    def raw(self) -> tuple[Fraction, ...]:
        """``(theta, eta, sigma, tau, gamma, chi)``, the order used by the table functions."""
        return (self.theta, self.eta, self.sigma, self.tau, self.gamma, self.chi)

    def c(self, r: RationalLike, u: RationalLike) -> Fraction:
        return c_coeff(self.tau, self.sigma, self.gamma, self.chi, r, u)

    def to_json(self) -> dict[str, str]:
        return {k: fmt(getattr(self, k)) for k in ("sigma", "tau", "gamma", "eta", "theta", "chi")}


def shift_params(p: QhParams, shift: RationalLike) -> ShiftedParams:
    s = q(shift)
    if s <= 0:
        raise DomainError(f"shift must be > 0, got {fmt(s)}")
    return ShiftedParams(
        sigma=p.sigma,
        tau=p.tau + s * (p.gamma - p.chi) + s * s * p.sigma,
        gamma=p.gamma + s * p.sigma,
        eta=p.eta,
        theta=p.theta + s * p.eta,
        chi=p.chi - s * p.sigma,
    )


def shifted_generator_table(p: QhParams, shift: RationalLike, r, s, u) -> VarCoeffTable:
    """Generator-route variance at times ``(r-p, s-p, u-p)`` with ``h6 = chi*/(chi + tau)``.

    This is the table that matches the starred direct expansion at ``(r, s, u)``.
    """
    shift = q(shift)
    starred = shift_params(p, shift)
    g = generator_from_raw(*p.raw(), phi=starred.chi)
    r, s, u = q(r), q(s), q(u)
    table = subtract_squared_mean(qh_regression_coeffs(g, r - shift, s - shift, u - shift))
    return replace(table, r=r, s=s, u=u)


CASES = ("A", "B", "C", "D")


def classify_and_normalize(raw: Iterable[RationalLike] | Mapping[str, Any]) -> tuple[QhParams, str]:
    """Scale a raw ``(theta, eta, sigma, tau, gamma, chi)`` tuple to its normal form.

    The first nonzero of ``chi``, ``sigma`` is scaled to 1 (cases A, B).
    Otherwise ``gamma = 0`` gives case C with ``tau = 1`` and ``gamma < 0``
    gives case D with ``gamma = -1``.
    """
    if isinstance(raw, Mapping):
        vals = tuple(q(str(raw.get(k, "0"))) for k in ("theta", "eta", "sigma", "tau", "gamma", "chi"))
    else:
        vals = tuple(q(v) for v in raw)
    if len(vals) != 6:
        raise InvalidParams(f"expected 6 parameters, got {len(vals)}")
    theta, eta, sigma, tau, gamma, chi = vals
    if not any((gamma, sigma, tau, chi)):
        raise InvalidParams("gamma, sigma, tau, chi must not all vanish")
    if chi < 0 or sigma < 0 or tau < 0:
        raise InvalidParams("chi, sigma and tau must be >= 0")
    if chi > 0:
        scale, case = chi, "A"
    elif sigma > 0:
        scale, case = sigma, "B"
    elif gamma == 0:
        scale, case = tau, "C"
    elif gamma < 0:
        scale, case = -gamma, "D"
    else:
        raise InvalidParams(f"gamma={fmt(gamma)} > 0 with chi = sigma = 0 violates gamma <= chi + 2 sqrt(sigma tau)")
    return QhParams(*(v / scale for v in vals)), case
