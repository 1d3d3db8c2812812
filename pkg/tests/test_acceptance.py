"""Acceptance criteria 1-10, each run at its stated tolerance and time limit.

Every criterion prints one ``criterion N: PASS`` or ``criterion N: FAIL``
line. Reports come from ``nearflow.acceptance``; values with an outside
reference are rechecked here against the independent oracles in
``tests/oracles.py``.
"""

import json
import time
from fractions import Fraction as F

import pytest

from nearflow import acceptance, harness
from nearflow.acceptance import report_bytes

from .oracles import q_ltimes, q_rtimes, right_inverse_by_solve, solve

LIMITS = {1: 10, 2: 10, 3: 10, 4: 60, 5: None, 6: 30, 7: None, 8: 30, 9: 120}
E_R = (F(1), F(0), F(0), F(0), F(0), F(0), F(1), F(0))
E_L = (F(0), F(0), F(1), F(0), F(0), F(0), F(0), F(1))


@pytest.fixture(scope="session")
def first_run():
    reports, seconds = {}, {}
    for n in acceptance.CRITERIA:
        start = time.perf_counter()
        reports[n] = acceptance.CRITERIA[n](workers=1)
        seconds[n] = time.perf_counter() - start
    return reports, seconds


def announce(capsys, n, ok, detail=""):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}{detail}")


@pytest.mark.parametrize("n", list(acceptance.CRITERIA))
def test_criterion(first_run, capsys, n):
    reports, seconds = first_run
    limit = LIMITS[n]
    in_time = limit is None or seconds[n] < limit
    ok = reports[n]["pass"] is True and in_time
    announce(capsys, n, ok, f" ({seconds[n]:.1f} s" + (f", limit {limit} s)" if limit else ")"))
    assert reports[n]["pass"] is True, json.dumps(reports[n], sort_keys=True)[:4000]
    assert in_time, f"criterion {n} took {seconds[n]:.1f} s, limit {limit} s"


def test_criterion_10_determinism(first_run, capsys):
    reports, _ = first_run
    again = acceptance.run_all(workers=1)
    parallel = acceptance.run_all(workers=8)
    same_runs = [n for n in reports if report_bytes(reports[n]) == report_bytes(again[n])]
    same_workers = [n for n in reports if report_bytes(reports[n]) == report_bytes(parallel[n])]
    ok = len(same_runs) == len(same_workers) == len(reports)
    announce(capsys, 10, ok)
    assert same_runs == list(reports)
    assert same_workers == list(reports)


# oracle cross-checks for reported values --------------------------------------


def _curve(h, t):
    return tuple(t * (1 - t) * a + (1 - t) * b + t * c for a, b, c in zip(h, E_R, E_L))


def _w(h, r, u):
    return q_ltimes(right_inverse_by_solve(q_ltimes, _curve(h, u), E_L), _curve(h, r))


def _x(h, s, r, u):
    return q_rtimes(right_inverse_by_solve(q_rtimes, _w(h, r, u), E_R), _w(h, s, u))


def test_counterexample_against_transcribed_products():
    h = (F(1), F(1), F(0), F(0), F(0), F(0), F(1), F(0))
    r, s, t, u = map(F, (1, 2, 3, 4))
    assert _w(h, F(1), F(2)) == (3, F(1, 2), F(1, 2), 0, 0, 0, F(3, 2), F(1, 2))
    x_sru, x_tsu, x_tru, x_srt = _x(h, s, r, u), _x(h, t, s, u), _x(h, t, r, u), _x(h, s, r, t)
    assert q_rtimes(x_sru, x_tsu) == x_tru
    assert q_ltimes(x_tru, x_srt) != x_sru
    report = acceptance.criterion_5()
    wit = next(res["witness"] for res in report["at_1_2_3_4"]["results"] if res["check"] == "flow_eq_2")
    lhs = tuple(F(v) for v in wit["lhs"]["x"] + wit["lhs"]["u"])
    rhs = tuple(F(v) for v in wit["rhs"]["x"] + wit["rhs"]["u"])
    assert lhs == q_ltimes(x_tru, x_srt)
    assert rhs == x_sru


def _gaussian_regression(cov, target, given):
    """Coefficients of E[X_target | X_given] for a centred Gaussian vector."""
    a = [[cov(i, j) for j in given] for i in given]
    return solve(a, [cov(target, j) for j in given])


def test_monte_carlo_theory_against_gaussian_conditioning(first_run):
    reports, _ = first_run
    mc = reports[9]
    cov = lambda s, t: F(min(s, t))  # noqa: E731
    assert [F(v).limit_denominator(1000) for v in mc["a_brownian_linear"]["theory"]] == _gaussian_regression(cov, 2, [1, 4])
    # E[X_3^2 | X_1] = X_1^2 + (3 - 1)
    assert [F(v) for v in mc["b_brownian_one_sided"]["theory"]] == [1, 0, 2]
    assert mc["c_sign_quadratic"]["rank_deficient"] is True
    assert mc["d_fourth_moment"]["z"][0] > 10


def test_brownian_variance_row_is_bridge_variance():
    r, s, u = F(1), F(2), F(4)
    row = harness.variance_coeffs(harness.QhParams(0, 0, 0, 0, 1, 1), r, s, u)
    assert row.F == (s - r) * (u - s) / (u - r)
    assert (row.A, row.B, row.C, row.D, row.E) == (0, 0, 0, 0, 0)
