import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearflow.affine import AffineAlgebra, AffineElem
from nearflow.core import Side, check_laws, index_triples, inverse_of_sum_with_null, is_null, balanced_combination
from nearflow.errors import NotInvertible
from nearflow.qh import QhDna, QhElem, qh_mul

rationals = st.fractions(min_value=-8, max_value=8, max_denominator=6)
nonzero = rationals.filter(lambda v: v != 0)


class BrokenRtimes(QhDna):
    """Q with one product term of ⋊ swapped, for mutation testing."""

    name = "qh-broken"

    def mul(self, side, a, b):
        out = qh_mul(side, a, b)
        if Side.parse(side) is Side.R:
            x = list(out.x)
            x[1] = a.x[1] * b.x[1] + a.u[0] * b.x[1]  # was x2*y1 + u1*y2
            return QhElem(tuple(x), out.u)
        return out


def test_q_laws_on_five_samples_all_triples():
    alg = QhDna()
    rng = random.Random(5)
    report = check_laws(alg, [alg.sample(rng) for _ in range(5)])
    assert report.ok, report.failed()
    assert report.counts["rtimes.associativity"] == 125
    assert report.counts["cross_null.rtimes_e_ltimes"] == 5


@pytest.mark.parametrize("alg", [AffineAlgebra(2), QhDna()], ids=["affine", "qh"])
def test_laws_on_zero_only(alg):
    assert check_laws(alg, [alg.zero]).ok


def test_mutated_rtimes_fails_associativity_with_witness():
    alg = BrokenRtimes()
    rng = random.Random(11)
    report = check_laws(alg, [alg.sample(rng) for _ in range(6)])
    assert report.checks["rtimes.associativity"] is False
    assert report.checks["ltimes.associativity"] is True
    wit = next(v for v in report.violations if v.law == "associativity" and v.side == "rtimes")
    x, y, z = wit.witness["x"], wit.witness["y"], wit.witness["z"]
    assert alg.mul_r(alg.mul_r(x, y), z) != alg.mul_r(x, alg.mul_r(y, z))


def test_empty_samples_rejected():
    with pytest.raises(ValueError):
        check_laws(AffineAlgebra(1), [])


@given(st.integers(1, 40), st.integers(1, 2000))
@settings(max_examples=60, deadline=None)
def test_index_triples_cover_every_position(n, cap):
    triples = index_triples(n, cap)
    for pos in range(3):
        assert {t[pos] for t in triples} == set(range(n))
    assert index_triples(n, cap) == triples
    if n**3 <= cap:
        assert len(triples) == n**3


# null elements ------------------------------------------------------------


def test_affine_alpha_zero_is_null():
    alg = AffineAlgebra(2)
    rng = random.Random(0)
    f = AffineElem(0, (F(3), F(-1, 2)))
    assert is_null(alg, f, [alg.sample(rng) for _ in range(10)])


def test_zero_is_null():
    alg = QhDna()
    assert is_null(alg, alg.zero, [alg.sample(random.Random(1))], Side.L)


def test_identity_is_not_null():
    alg = AffineAlgebra(1)
    assert not is_null(alg, alg.identity, [AffineElem(2, (0,))])


def test_cross_null_identities_are_null_for_the_other_product():
    alg = QhDna()
    probes = [alg.sample(random.Random(k)) for k in range(8)]
    assert is_null(alg, alg.id_l, probes, Side.R)
    assert is_null(alg, alg.id_r, probes, Side.L)


# inverse of x + f ----------------------------------------------------------


def test_inverse_of_sum_examples():
    alg = AffineAlgebra(1)
    assert inverse_of_sum_with_null(alg, AffineElem(2, (3,)), AffineElem(0, (1,))) == AffineElem(F(1, 2), (-2,))
    x = AffineElem(5, (F(2, 3),))
    assert inverse_of_sum_with_null(alg, x, alg.zero) == alg.inverse(x)
    assert inverse_of_sum_with_null(alg, alg.identity, AffineElem(0, (5,))) == AffineElem(1, (-5,))


def test_balanced_examples():
    alg = AffineAlgebra(1)
    assert balanced_combination(alg, AffineElem(2, (0,)), 1, 1, 0, alg.zero) == alg.identity
    assert balanced_combination(alg, AffineElem(7, (3,)), 1, 0, 0, alg.zero) == alg.identity
    assert balanced_combination(alg, AffineElem(3, (2,)), 2, 1, 1, AffineElem(0, (1,))) == alg.identity


def test_balanced_raises_when_a_term_is_singular():
    alg = AffineAlgebra(1)
    # alpha x + beta e = (-1 + 1) e is singular
    with pytest.raises(NotInvertible):
        balanced_combination(alg, alg.identity, -1, 1, 0, alg.zero)


@given(nonzero, st.lists(rationals, min_size=2, max_size=2), st.lists(rationals, min_size=2, max_size=2), rationals, rationals, rationals)
@settings(max_examples=150, deadline=None)
def test_affine_null_identities_property(alpha, vec, fvec, a, b, c):
    alg = AffineAlgebra(2)
    x, f = AffineElem(alpha, tuple(vec)), AffineElem(0, tuple(fvec))
    inv = inverse_of_sum_with_null(alg, x, f)
    assert alg.mul(x + f, inv) == alg.identity
    try:
        got = balanced_combination(alg, x, a, b, c, f)
    except NotInvertible:
        return
    assert got == alg.identity


@given(st.lists(nonzero, min_size=8, max_size=8), st.lists(rationals, min_size=4, max_size=4), rationals, rationals, rationals)
@settings(max_examples=100, deadline=None)
def test_q_rtimes_null_identities_property(xs, fs, a, b, c):
    alg = QhDna()
    x = QhElem.of(*xs)
    f = QhElem.of(0, 0, fs[0], 0, fs[1], fs[2], 0, fs[3])
    inv = inverse_of_sum_with_null(alg, x, f, Side.R)
    assert alg.mul_r(x + f, inv) == alg.id_r
    try:
        got = balanced_combination(alg, x, a, b, c, f, Side.R)
    except NotInvertible:
        return
    assert got == alg.id_r
