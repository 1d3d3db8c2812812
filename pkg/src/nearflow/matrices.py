"""Square matrices over Q as nested tuples, with fraction-free inversion."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

from .errors import DimensionMismatch, NotInvertible
from .rational import RationalLike, q

Matrix = tuple[tuple[Fraction, ...], ...]


def matrix(rows: Sequence[Sequence[RationalLike]]) -> Matrix:
    out = tuple(tuple(q(v) for v in row) for row in rows)
    n = len(out)
    if n == 0 or any(len(row) != n for row in out):
        raise DimensionMismatch("matrix must be square and nonempty")
    return out


def eye(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def zeros(n: int) -> Matrix:
    return tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n))


def dim(a: Matrix) -> int:
    return len(a)


def _same(a: Matrix, b: Matrix) -> None:
    if len(a) != len(b):
        raise DimensionMismatch(f"{len(a)}x{len(a)} vs {len(b)}x{len(b)}")


def add(a: Matrix, b: Matrix) -> Matrix:
    _same(a, b)
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def sub(a: Matrix, b: Matrix) -> Matrix:
    _same(a, b)
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def scale(c: RationalLike, a: Matrix) -> Matrix:
    c = q(c)
    return tuple(tuple(c * x for x in row) for row in a)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    _same(a, b)
    cols = tuple(zip(*b))
    return tuple(tuple(_dot(row, col) for col in cols) for row in a)


def _dot(row: Sequence[Fraction], col: Sequence[Fraction]) -> Fraction:
    # one normalisation per entry instead of one per partial sum
    num, den = 0, 1
    for x, y in zip(row, col):
        pd = x.denominator * y.denominator
        num = num * pd + x.numerator * y.numerator * den
        den *= pd
    return Fraction(num, den)


def lincomb(*terms: tuple[RationalLike, Matrix]) -> Matrix:
    """``sum(c_i * M_i)``."""
    it = iter(terms)
    c, m = next(it)
    acc = scale(c, m)
    for c, m in it:
        acc = add(acc, scale(c, m))
    return acc


def _integer_rows(a: Matrix) -> tuple[list[list[int]], list[int]]:
    """Scale each row to integers; returns the integer rows and row multipliers."""
    rows, mults = [], []
    for row in a:
        m = lcm(*(x.denominator for x in row)) if row else 1
        rows.append([int(x * m) for x in row])
        mults.append(m)
    return rows, mults


def det(a: Matrix) -> Fraction:
    """Determinant by Bareiss elimination on the row-scaled integer matrix."""
    rows, mults = _integer_rows(a)
    n = len(rows)
    sign, prev = 1, 1
    for k in range(n - 1):
        if rows[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if rows[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            rows[k], rows[swap] = rows[swap], rows[k]
            sign = -sign
        pivot = rows[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                rows[i][j] = (pivot * rows[i][j] - rows[i][k] * rows[k][j]) // prev
            rows[i][k] = 0
        prev = pivot
    scale_ = 1
    for m in mults:
        scale_ *= m
    return Fraction(sign * rows[n - 1][n - 1], scale_)


def inverse(a: Matrix, name: str = "matrix") -> Matrix:
    """Exact inverse by fraction-free Gauss-Jordan elimination.

    Raises NotInvertible on a zero pivot column (singular matrix).
    """
    rows, mults = _integer_rows(a)
    n = len(rows)
    aug = [row + [int(i == j) for j in range(n)] for i, row in enumerate(rows)]
    prev = 1
    for k in range(n):
        if aug[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if aug[i][k] != 0), None)
            if swap is None:
                raise NotInvertible(f"{name} is singular", what=name)
            aug[k], aug[swap] = aug[swap], aug[k]
        pivot = aug[k][k]
        for i in range(n):
            if i == k:
                continue
            factor = aug[i][k]
            aug[i] = [(pivot * x - factor * y) // prev for x, y in zip(aug[i], aug[k])]
        prev = pivot
    # left block is now prev * I and the right block prev * inverse(rows)
    inv_int = tuple(tuple(Fraction(aug[i][n + j], prev) for j in range(n)) for i in range(n))
    # inverse(D A) = inverse(A) D^{-1}  =>  inverse(A) = inverse(DA) D
    return tuple(tuple(inv_int[i][j] * mults[j] for j in range(n)) for i in range(n))


def is_invertible(a: Matrix) -> bool:
    return det(a) != 0


def to_json(a: Matrix) -> list[list[str]]:
    from .rational import fmt

    return [[fmt(x) for x in row] for row in a]
