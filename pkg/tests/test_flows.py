import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearflow import flows
from nearflow.core import Side
from nearflow.endo import EndoPairDna, ep_two_way_flow
from nearflow.errors import DomainError, NotInvertible
from nearflow.harness import GeneratorParams6, qh_regression_coeffs
from nearflow.qh import E_LTIMES, E_RTIMES, QhDna, QhElem

from .oracles import q_ltimes, right_inverse_by_solve

Q = QhDna()
ZERO = Q.zero
COUNTER = QhElem.of(1, 1, 0, 0, 0, 0, 1, 0)
coord = st.fractions(-4, 4, max_denominator=3)
q_elem = st.lists(coord, min_size=8, max_size=8).map(lambda v: QhElem.of(*v))


def times(k, top=6, den=4):
    return st.lists(st.integers(0, top * den), min_size=k, max_size=k, unique=True).map(lambda v: tuple(F(x, den) for x in sorted(v)))


def oracle_w(h, r, u):
    """``h_u^{-⋉} ⋉ h_r`` from the transcribed product and a linear solve."""

    def curve(t):
        return tuple(t * (1 - t) * a + (1 - t) * b + t * c for a, b, c in zip(h.coords(), E_RTIMES.coords(), E_LTIMES.coords()))

    # y -> h_u ⋉ y is linear; in an associative product the right inverse is the inverse
    inv = right_inverse_by_solve(q_ltimes, curve(u), E_LTIMES.coords())
    return q_ltimes(inv, curve(r))


# curve, w and x -------------------------------------------------------------


def test_curve_endpoints_and_midpoint():
    h = Q.sample(random.Random(1))
    assert flows.generator_curve(Q, h, 0) == E_RTIMES
    assert flows.generator_curve(Q, h, 1) == E_LTIMES
    assert flows.generator_curve(Q, ZERO, F(1, 2)) == E_RTIMES / 2 + E_LTIMES / 2
    with pytest.raises(DomainError):
        flows.generator_curve(Q, h, -1)


@given(st.fractions(0, 5, max_denominator=6))
def test_curve_matches_displayed_form(u):
    h = GeneratorParams6(1, 0, 0, 0, 0, 0).element()
    assert flows.generator_curve(Q, h, u) == QhElem.of((1 - u) * (1 + u), 0, u, 0, 0, 0, 1 - u, u)


@given(times(2, den=3))
def test_w_of_zero_generator(ts):
    r, u = ts
    assert flows.w_element(Q, ZERO, r, u) == E_RTIMES * ((u - r) / u) + E_LTIMES * (r / u)


def test_w_counterexample_value():
    got = flows.w_element(Q, COUNTER, 1, 2)
    assert got == QhElem.of(3, F(1, 2), F(1, 2), 0, 0, 0, F(3, 2), F(1, 2))
    assert got.coords() == oracle_w(COUNTER, F(1), F(2))


@given(q_elem, times(2))
@settings(max_examples=100, deadline=None)
def test_w_matches_oracle(h, ts):
    r, u = ts
    try:
        got = flows.w_element(Q, h, r, u)
    except NotInvertible:
        assert right_inverse_by_solve(q_ltimes, flows.generator_curve(Q, h, u).coords(), E_LTIMES.coords()) is None
        return
    assert got.coords() == oracle_w(h, r, u)


def test_flow_of_zero_generator_is_trivial():
    r, s, u = F(1, 3), 1, F(5, 2)
    expect = E_RTIMES * ((u - s) / (u - r)) + E_LTIMES * ((s - r) / (u - r))
    assert flows.flow_element(Q, ZERO, r, s, u) == expect
    alg = EndoPairDna(2)
    assert flows.flow_element(alg, alg.zero, r, s, u) == alg.id_r * ((u - s) / (u - r)) + alg.id_l * ((s - r) / (u - r))


def test_flow_example_matches_closed_form():
    g = GeneratorParams6(1, 0, 0, 0, 0, 1)
    x = flows.flow_element(Q, g.element(), 1, 2, 4)
    assert x == QhElem.of(F(6, 5), 0, F(1, 5), 0, 0, F(2, 5), F(2, 3), F(1, 3))
    assert x == qh_regression_coeffs(g, 1, 2, 4).as_element()


def test_endo_engine_matches_closed_form_on_random_pairs():
    rng = random.Random(7)
    alg = EndoPairDna(2)
    checked = 0
    while checked < 10:
        h = alg.sample(rng)
        try:
            x = ep_two_way_flow(h.a1, h.a2, F(1, 2), 1, 3)
        except NotInvertible:
            continue
        assert x == flows.flow_element(alg, h, F(1, 2), 1, 3)
        checked += 1


def test_times_must_increase():
    with pytest.raises(DomainError):
        flows.flow_element(Q, ZERO, 2, 1, 3)


# verification -----------------------------------------------------------------


def test_counterexample_second_equation_fails():
    fam = flows.FlowFamily(Q, generator=COUNTER)
    v = flows.verify_two_way_flow(fam, [(1, 2, 3, 4)])
    assert v.checks["flow_eq_1"] is True
    assert v.checks["flow_eq_2"] is False
    assert v.checks["structure"] is True
    assert v.checks["invertibility"] is True
    (res,) = [r for r in v.results() if r["check"] == "flow_eq_2"]
    assert {k: res["witness"][k] for k in "rstu"} == {"r": "1", "s": "2", "t": "3", "u": "4"}


def test_counterexample_passes_minimal_profile():
    fam = flows.FlowFamily(Q, generator=COUNTER)
    assert flows.verify_two_way_flow(fam, [(1, 2, 3, 4), (F(1, 2), 1, F(3, 2), 5)], profile="minimal").ok


def test_trivial_flow_passes():
    fam = flows.FlowFamily(Q, generator=ZERO)
    assert flows.verify_two_way_flow(fam, [(0, 1, 2, 3), (F(1, 3), F(1, 2), 1, 7)]).ok


def test_valid_generator_passes_on_random_quadruples():
    rng = random.Random(13)
    quads = [tuple(sorted(F(v, 4) for v in rng.sample(range(25), 4))) for _ in range(50)]
    fam = flows.FlowFamily(Q, generator=GeneratorParams6(F(1, 2), 0, F(1, 2), 0, 0, 0).element())
    v = flows.verify_two_way_flow(fam, quads, s_probes=5)
    assert v.ok, v.failed()
    assert v.counts["structure"] >= 50 * 5


def test_table_family_uses_its_middle_times():
    g = GeneratorParams6(0, 1, 1, 1, 0, 1)
    ts = [(0, F(1, 2), 2), (0, 1, 2), (0, F(3, 2), 2), (F(1, 2), 1, 2), (0, F(1, 2), 1), (F(1, 2), F(3, 2), 2), (1, F(3, 2), 2)]
    table = {t: qh_regression_coeffs(g, *t).as_element() for t in ts}
    fam = flows.FlowFamily(Q, table=table)
    assert fam.middle_times(F(0), F(2), 5) == [F(1, 2), 1, F(3, 2)]
    assert flows.verify_two_way_flow(fam, [(0, F(1, 2), 1, 2)]).ok
    with pytest.raises(DomainError):
        fam(0, F(1, 4), 2)


def test_family_requires_one_backing():
    with pytest.raises(ValueError):
        flows.FlowFamily(Q)
    with pytest.raises(ValueError):
        flows.FlowFamily(Q, generator=ZERO, func=lambda r, s, u: ZERO)


def test_verdict_json_shape():
    fam = flows.FlowFamily(Q, generator=COUNTER)
    body = flows.verify_two_way_flow(fam, [(1, 2, 3, 4)]).to_json()
    assert set(body) >= {"pass", "results", "counts"}
    assert body["pass"] is False


# generator checks --------------------------------------------------------------

TRIPLES = [(F(1, 2), 1, 2), (1, 2, 3), (1, F(3, 2), 4)]


def test_zero_is_a_generator():
    assert flows.is_flow_generator(Q, ZERO, TRIPLES).ok


def test_theorem_generator_passes():
    v = flows.is_flow_generator(Q, GeneratorParams6(1, 0, F(1, 2), 1, 1, 1).element(), TRIPLES)
    assert v.ok, v.failed()


def test_counterexample_is_not_a_generator():
    v = flows.is_flow_generator(Q, COUNTER, TRIPLES)
    assert not v.ok
    assert "generator" in v.failed()
    assert v.violations[0].witness


@pytest.mark.parametrize("beta,gamma", [(0, F(-3, 2)), (1, -2), (F(1, 4), F(-1, 2)), (0, F(1, 2))])
def test_inadmissible_scalar_generators_fail_with_witness(beta, gamma):
    for alg in (Q, EndoPairDna(2)):
        h = alg.id_r * beta + alg.id_l * gamma
        v = flows.is_flow_generator(alg, h, TRIPLES)
        assert not v.ok
        wit = next(x.witness for x in v.violations if x.law == "invertibility")
        assert "confirmed" in wit or "error" in wit


def test_generator_checks_need_positive_r():
    with pytest.raises(DomainError):
        flows.is_flow_generator(Q, ZERO, [(0, 1, 2)])


def test_span_coefficients():
    assert flows.span_coefficients(Q, E_RTIMES * 2 - E_LTIMES) == (2, -1)
    assert flows.span_coefficients(Q, COUNTER) is None


# recovery, identities, shifts ------------------------------------------------


def test_recover_trivial_and_probe_independence():
    assert flows.recover_generator(flows.FlowFamily(Q, generator=ZERO)) == ZERO
    h = GeneratorParams6(2, 1, 1, 0, 1, 1).element()
    fam = flows.FlowFamily(Q, generator=h)
    assert {flows.recover_generator(fam, t) for t in (F(1, 4), F(1, 2), F(3, 4))} == {h}
    with pytest.raises(DomainError):
        flows.recover_generator(fam, 1)


@given(q_elem, times(3), times(4))
@settings(max_examples=80, deadline=None)
def test_h_identities_hold_for_any_element(h, tri, quad):
    assert flows.check_h_identities(Q, h, [tri], [quad]).ok


def test_h_identity_examples():
    h = Q.sample(random.Random(4))
    rep = flows.check_h_identities(Q, h, [(0, F(1, 2), 1), (1, 2, 4)], [(1, 2, 3, 5)])
    assert rep.ok
    assert rep.counts == {"h_ident": 2, "h_ident1": 1, "hrstu": 1}
    assert flows.generator_curve(Q, h, F(1, 2)) == E_RTIMES / 2 + E_LTIMES / 2 + h / 4


def test_w_cocycle_holds():
    h = GeneratorParams6(1, 0, 0, 1, 0, 1).element()
    assert flows.w_cocycle(Q, h, [(0, 1, 2), (F(1, 2), 1, 3)]).ok


def test_shift_family_properties():
    triv = flows.FlowFamily(Q, generator=ZERO)
    shifted = flows.shift_family(triv, F(3, 2))
    r, s, u = F(1, 2), 1, 4
    assert shifted(r, s, u) == triv(r, s, u)
    fam = flows.FlowFamily(Q, generator=GeneratorParams6(1, 0, F(1, 2), 0, 1, 1).element())
    once = flows.shift_family(flows.shift_family(fam, F(1, 2)), 1)
    both = flows.shift_family(fam, F(3, 2))
    assert once(0, 1, 2) == both(0, 1, 2) == fam(F(3, 2), F(5, 2), F(7, 2))
    assert flows.verify_two_way_flow(both, [(0, 1, 2, 3), (0, F(1, 2), 2, 5)]).ok
    with pytest.raises(DomainError):
        flows.shift_family(fam, 0)


def test_side_enum_parses_names():
    assert Side.parse("ltimes") is Side.L
    assert Side.parse(Side.R) is Side.R
