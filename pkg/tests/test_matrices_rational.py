import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearflow import matrices as mx
from nearflow.errors import NotInvertible
from nearflow.jsonio import dumps, encode, load_arg
from nearflow.rational import fmt, q, qs

from .oracles import gauss_inverse, leibniz_det, naive_matmul

entries = st.fractions(min_value=-5, max_value=5, max_denominator=4)


def square(n):
    return st.lists(st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n)


any_square = st.integers(1, 4).flatmap(square)


@given(any_square)
@settings(max_examples=200, deadline=None)
def test_det_matches_leibniz(m):
    assert mx.det(mx.matrix(m)) == leibniz_det(m)


@given(any_square)
@settings(max_examples=200, deadline=None)
def test_inverse_matches_gauss_jordan(m):
    ref = gauss_inverse(m)
    if ref is None:
        with pytest.raises(NotInvertible):
            mx.inverse(mx.matrix(m))
        assert not mx.is_invertible(mx.matrix(m))
    else:
        assert mx.inverse(mx.matrix(m)) == tuple(tuple(row) for row in ref)


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(square(n), square(n))))
@settings(max_examples=100, deadline=None)
def test_matmul_matches_naive(pair):
    a, b = pair
    assert mx.matmul(mx.matrix(a), mx.matrix(b)) == tuple(map(tuple, naive_matmul(a, b)))


def test_singular_inverse_names_matrix():
    with pytest.raises(NotInvertible, match="H_b"):
        mx.inverse(mx.matrix([[1, 2], [2, 4]]), name="H_b")


def test_inverse_times_matrix_is_identity():
    m = mx.matrix([[2, 1, 0], [F(1, 3), 0, 4], [0, -1, 1]])
    assert mx.matmul(m, mx.inverse(m)) == mx.eye(3)


# rationals and JSON --------------------------------------------------------


@pytest.mark.parametrize("bad", [0.5, True, None, 1j])
def test_q_rejects_inexact(bad):
    with pytest.raises(TypeError):
        q(bad)


def test_q_parses_strings_and_ints():
    assert qs(["3/6", 2, " -1/4 ", F(5, 10)]) == (F(1, 2), F(2), F(-1, 4), F(1, 2))
    with pytest.raises(ValueError):
        q("   ")


@given(st.fractions())
def test_fmt_round_trips(v):
    assert q(fmt(v)) == v
    assert "/" not in fmt(v) or v.denominator != 1


def test_dumps_is_canonical():
    a = dumps({"b": F(1, 2), "a": [F(3), (F(-2, 4),)]})
    assert a == dumps({"a": [F(3), (F(-1, 2),)], "b": F(1, 2)})
    assert json.loads(a) == {"a": ["3", ["-1/2"]], "b": "1/2"}
    assert encode(None) is None


def test_load_arg_follows_at_file(tmp_path):
    p = tmp_path / "h.json"
    p.write_text('{"x": ["1"]}', encoding="utf-8")
    assert load_arg(f"@{p}") == {"x": ["1"]}
    assert load_arg('{"x": 1}') == {"x": 1}
