"""Deterministic report builders for the acceptance suite.

Each ``criterion_N`` returns a JSON-ready dict with a ``pass`` flag.  Reports
contain no timings or environment data, so their serialised bytes depend
only on the seeds; ``workers`` only changes how the work is scheduled.
"""

from __future__ import annotations

import contextlib
import io
import json
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import cli, flows, harness, lab
from .affine import AffineAlgebra, AffineElem, AffineGenerator, aff_one_way_flow, aff_recover_generator, one_way_flow
from .affine import OneWayFamily, verify_one_way_flow
from .core import Side, check_laws, inverse_of_sum_with_null, is_null, balanced_combination
from .endo import EndoPair, EndoPairDna, ep_two_way_flow
from .errors import NotInvertible, RankDeficient
from .jsonio import dumps, encode
from .qh import QhDna, QhElem
from .rational import fmt

SEED = 20240611
MC_SEED = 2024
F = Fraction


def _pmap(func: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * workers))))


def _rq(rng: random.Random, span: int = 5, den: int = 4) -> Fraction:
    return F(rng.randint(-span, span), rng.randint(1, den))


def random_times(rng: random.Random, k: int, lo: Fraction = F(0), pool_max: int = 24, den: int = 4) -> tuple[Fraction, ...]:
    """``k`` distinct ascending rationals in ``[lo, lo + pool_max/den]``."""
    picks = sorted(rng.sample(range(pool_max + 1), k))
    return tuple(lo + F(p, den) for p in picks)


# --------------------------------------------------------------------------
# 1. law suite


def _laws_job(spec: tuple[str, int, int]) -> dict[str, Any]:
    kind, dim, seed = spec
    alg = {"affine": lambda: AffineAlgebra(dim), "endo": lambda: EndoPairDna(dim), "qh": QhDna}[kind]()
    rng = random.Random(seed)
    samples = [alg.sample(rng) for _ in range(100)]
    report = check_laws(alg, samples, max_triples=900)
    return {"algebra": alg.name, "samples": len(samples), **report.to_json()}


def criterion_1(workers: int = 1) -> dict[str, Any]:
    jobs = [("affine", 1, SEED + 1), ("affine", 3, SEED + 2), ("endo", 1, SEED + 3), ("endo", 2, SEED + 4), ("endo", 3, SEED + 5), ("qh", 0, SEED + 6)]
    results = _pmap(_laws_job, jobs, workers)
    cross_null = all(any(k.startswith("cross_null") for k in r["checks"]) for r in results if not r["algebra"].startswith("affine"))
    return {"criterion": 1, "pass": all(r["pass"] for r in results) and cross_null, "algebras": results}


# --------------------------------------------------------------------------
# 2. inverse of x + null, and the balanced combination identity


def random_null(alg, rng: random.Random, side: Side | None = None):
    """A null element for the chosen product (affine: alpha = 0)."""
    if isinstance(alg, AffineAlgebra):
        return AffineElem(0, tuple(_rq(rng) for _ in range(alg.dim)))
    if side is Side.R:
        return QhElem.of(0, 0, _rq(rng), 0, _rq(rng), _rq(rng), 0, _rq(rng))
    return QhElem.of(_rq(rng), 0, 0, _rq(rng), 0, _rq(rng), _rq(rng), 0)


def _prop_p1_job(spec: tuple[str, str | None, int, int]) -> dict[str, Any]:
    kind, side_name, seed, want = spec
    side = Side.parse(side_name) if side_name else None
    alg = AffineAlgebra(2) if kind == "affine" else QhDna()
    near = alg if side is None else alg.view(side)
    rng = random.Random(seed)
    probes = [alg.sample(rng) for _ in range(6)]
    done = inv_ok = balanced_ok = null_ok = 0
    first_failure = None
    while done < want:
        x = alg.sample(rng)
        f = random_null(alg, rng, side)
        a, b, c = _rq(rng), _rq(rng), _rq(rng)
        if near.try_inverse(x) is None:
            continue
        try:
            j = balanced_combination(alg, x, a, b, c, f, side)
        except NotInvertible:
            continue
        done += 1
        null_ok += is_null(alg, f, probes, side) and near.try_inverse(f) is None
        inv = inverse_of_sum_with_null(alg, x, f, side)
        e = near.identity
        ok = near.mul(x + f, inv) == e and near.mul(inv, x + f) == e
        inv_ok += ok
        balanced_ok += j == e
        if first_failure is None and (not ok or j != e):
            first_failure = {"x": x, "f": f, "alpha": a, "beta": b, "gamma": c}
    return {
        "algebra": near.name,
        "instances": done,
        "null_verified": null_ok,
        "inverse_of_sum_ok": inv_ok,
        "balanced_combination_ok": balanced_ok,
        "pass": inv_ok == done and balanced_ok == done and null_ok == done,
        "witness": first_failure,
    }


def criterion_2(workers: int = 1) -> dict[str, Any]:
    jobs = [("affine", None, SEED + 10, 500), ("qh", "ltimes", SEED + 11, 500), ("qh", "rtimes", SEED + 12, 500)]
    results = _pmap(_prop_p1_job, jobs, workers)
    return {"criterion": 2, "pass": all(r["pass"] for r in results), "runs": results}


# --------------------------------------------------------------------------
# 3. one-way flows


def _one_way_job(seed: int) -> dict[str, Any]:
    rng = random.Random(seed)
    dim = rng.randint(1, 3)
    alg = AffineAlgebra(dim)
    g = AffineGenerator(F(rng.randint(0, 6), rng.randint(1, 3)), tuple(_rq(rng) for _ in range(dim)))
    h = g.element
    triples = [random_times(rng, 3) for _ in range(50)]
    closed_ok = all(aff_one_way_flow(g, s, t) == one_way_flow(alg, h, s, t) for s, t, _ in triples)
    report = verify_one_way_flow(OneWayFamily(alg, func=lambda s, t: aff_one_way_flow(g, s, t)), triples)
    t = triples[0][2]
    recovered = aff_recover_generator(aff_one_way_flow(g, 0, t), t) == g
    return {"closed_form": closed_ok, "flow": report.ok, "recovered": recovered}


def criterion_3(workers: int = 1) -> dict[str, Any]:
    results = _pmap(_one_way_job, [SEED + 100 + i for i in range(200)], workers)
    summary = {k: sum(r[k] for r in results) for k in ("closed_form", "flow", "recovered")}
    return {"criterion": 3, "pass": all(v == len(results) for v in summary.values()), "generators": len(results), "ok_counts": summary}


# --------------------------------------------------------------------------
# 4, 6, 7. the generator parameter grid


def _rational_sqrt(x: Fraction) -> Fraction | None:
    from math import isqrt

    n, d = x.numerator, x.denominator
    rn, rd = isqrt(n), isqrt(d)
    return F(rn, rd) if rn * rn == n and rd * rd == d else None


def generator_grid() -> list[harness.GeneratorParams6]:
    out = []
    for alpha in (F(0), F(1, 2), F(2)):
        for rho in (F(0), F(1, 2), F(1)):
            betas = [F(0), F(1)]
            root = _rational_sqrt(alpha * (1 - rho))
            if root is not None and -2 * root not in betas:
                betas.append(-2 * root)
            for beta in betas:
                for h4 in (0, 1):
                    for h5 in (0, 1):
                        for h6 in (0, 1):
                            out.append(harness.GeneratorParams6(alpha, beta, rho, h4, h5, h6))
    return out


def _grid_flow_job(spec: tuple[int, int]) -> dict[str, Any]:
    index, seed = spec
    g = generator_grid()[index]
    rng = random.Random(seed)
    alg = QhDna()
    quads = [random_times(rng, 4) for _ in range(50)]
    closed = flows.FlowFamily(alg, func=lambda r, s, u: harness.qh_regression_coeffs(g, r, s, u).as_element())
    verdict = flows.verify_two_way_flow(closed, quads, s_probes=5)
    engine = flows.FlowFamily(alg, generator=g.element())
    same = all(closed(*t) == engine(*t) for r, s, t_, u in quads[:8] for t in ((r, s, u), (r, t_, u), (s, t_, u)))
    return {"generator": g.to_json(), "pass": verdict.ok and same, "dual_path": same, "failed": verdict.failed()}


def random_endo_generator(rng: random.Random, dim: int) -> EndoPair:
    """Upper-triangular ``(G, H)`` whose diagonal pairs meet the scalar bounds."""
    G = [[F(0)] * dim for _ in range(dim)]
    H = [[F(0)] * dim for _ in range(dim)]
    for i in range(dim):
        H[i][i] = -F(rng.randint(0, 3), 4)
        G[i][i] = -H[i][i] + F(rng.randint(0, 6), rng.randint(1, 3))
        for j in range(i + 1, dim):
            G[i][j], H[i][j] = _rq(rng, 3, 2), _rq(rng, 3, 2)
    return EndoPair(G, H)


def _endo_job(seed: int) -> dict[str, Any]:
    rng = random.Random(seed)
    dim = rng.randint(1, 3)
    alg = EndoPairDna(dim)
    h = random_endo_generator(rng, dim)
    quads = [random_times(rng, 4, pool_max=16) for _ in range(8)]
    fam = flows.FlowFamily(alg, generator=h)
    try:
        same = all(ep_two_way_flow(h.a1, h.a2, r, s, u) == fam(r, s, u) for r, s, t, u in quads)
        verdict = flows.verify_two_way_flow(fam, quads, s_probes=5)
    except NotInvertible as exc:
        return {"dim": dim, "skipped": str(exc), "pass": True, "compared": False}
    return {"dim": dim, "pass": same and verdict.ok, "compared": True, "dual_path": same, "failed": verdict.failed()}


def criterion_4(workers: int = 1) -> dict[str, Any]:
    grid = generator_grid()
    qh = _pmap(_grid_flow_job, [(i, SEED + 400 + i) for i in range(len(grid))], workers)
    endo = _pmap(_endo_job, [SEED + 4000 + i for i in range(60)], workers)
    compared = sum(r["compared"] for r in endo)
    return {
        "criterion": 4,
        "pass": all(r["pass"] for r in qh) and all(r["pass"] for r in endo) and compared >= 50,
        "qh_generators": len(qh),
        "qh_failures": [r for r in qh if not r["pass"]],
        "endo_compared": compared,
        "endo_failures": [r for r in endo if not r["pass"]],
    }


COUNTEREXAMPLE = QhElem.of(1, 1, 0, 0, 0, 0, 1, 0)


def criterion_5(workers: int = 1) -> dict[str, Any]:
    alg = QhDna()
    rng = random.Random(SEED + 500)
    fam = flows.FlowFamily(alg, generator=COUNTEREXAMPLE)
    quads = [random_times(rng, 4, lo=F(1, 8)) for _ in range(30)]
    broad = flows.verify_two_way_flow(fam, quads, s_probes=5)
    at_1234 = flows.verify_two_way_flow(fam, [(1, 2, 3, 4)], s_probes=5)
    r0 = flows.verify_two_way_flow(fam, [(0, s, t, u) for (_, s, t, u) in quads], s_probes=5, profile="minimal")
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.run(["gen-check", "--algebra", "qh", "--generator", dumps(COUNTEREXAMPLE), "--quadruples", "1,2,3,4"])
    payload = json.loads(buf.getvalue())
    failing = [r["check"] for r in payload["results"] if not r["pass"]]
    ok = (
        broad.checks.get("invertibility") is True
        and broad.checks.get("flow_eq_1") is True
        and broad.checks.get("structure") is True
        and at_1234.checks.get("flow_eq_2") is False
        and at_1234.checks.get("flow_eq_1") is True
        and r0.ok
        and code == 2
        and "flow_eq_2" in failing
    )
    return {
        "criterion": 5,
        "pass": ok,
        "sampled": broad.to_json(),
        "at_1_2_3_4": at_1234.to_json(),
        "r0_slice": r0.checks,
        "cli_exit": code,
        "cli_failing_checks": failing,
    }


SCALAR_BAD = ((F(0), F(-3, 2)), (F(1), F(-2)), (F(0), F(1, 2)), (F(-1), F(0)), (F(-1, 2), F(1, 4)), (F(1, 4), F(-1, 2)))
SCALAR_GOOD = ((F(1, 2), F(-1, 2)), (F(1), F(0)), (F(3), F(0)), (F(2), F(-1)))
GEN_TRIPLES = ((F(1, 2), F(1), F(2)), (F(1), F(2), F(3)), (F(1), F(3, 2), F(4)), (F(2), F(5, 2), F(3)))


def _gen_check_job(index: int) -> dict[str, Any]:
    g = generator_grid()[index]
    v = flows.is_flow_generator(QhDna(), g.element(), GEN_TRIPLES, u_probes=5)
    return {"generator": g.to_json(), "pass": v.ok}


def _scalar_job(spec: tuple[str, Fraction, Fraction]) -> dict[str, Any]:
    kind, beta, gamma = spec
    alg = QhDna() if kind == "qh" else EndoPairDna(2)
    h = alg.id_r * beta + alg.id_l * gamma
    v = flows.is_flow_generator(alg, h, GEN_TRIPLES, u_probes=5)
    wit = next((w.witness for w in v.violations), None)
    return {"algebra": alg.name, "beta": fmt(beta), "gamma": fmt(gamma), "generator": v.ok, "witness": encode(wit)}


def criterion_6(workers: int = 1) -> dict[str, Any]:
    grid = _pmap(_gen_check_job, list(range(len(generator_grid()))), workers)
    cx = flows.is_flow_generator(QhDna(), COUNTEREXAMPLE, GEN_TRIPLES, u_probes=5)
    bad = _pmap(_scalar_job, [(k, b, g) for k in ("qh", "endo") for b, g in SCALAR_BAD], workers)
    good = _pmap(_scalar_job, [(k, b, g) for k in ("qh", "endo") for b, g in SCALAR_GOOD], workers)
    ok = (
        all(r["pass"] for r in grid)
        and not cx.ok
        and bool(cx.violations)
        and all(not r["generator"] and r["witness"] for r in bad)
        and all(r["generator"] for r in good)
    )
    return {
        "criterion": 6,
        "pass": ok,
        "grid_passed": sum(r["pass"] for r in grid),
        "grid_size": len(grid),
        "counterexample": cx.to_json(),
        "scalar_rejected": bad,
        "scalar_admitted": good,
    }


def _recover_job(index: int) -> dict[str, Any]:
    g = generator_grid()[index]
    h = g.element()
    fam = flows.FlowFamily(QhDna(), generator=h)
    got = {fmt(t): flows.recover_generator(fam, t) == h for t in (F(1, 4), F(1, 2), F(3, 4))}
    return {"generator": g.to_json(), "pass": all(got.values()), "by_t": got}


def criterion_7(workers: int = 1) -> dict[str, Any]:
    results = _pmap(_recover_job, list(range(len(generator_grid()))), workers)
    return {"criterion": 7, "pass": all(r["pass"] for r in results), "generators": len(results), "failures": [r for r in results if not r["pass"]]}


# --------------------------------------------------------------------------
# 8. coefficient layer


def param_grid() -> list[harness.QhParams]:
    out = []
    vals = (F(0), F(1, 2), F(2))
    for chi in (0, 1):
        for sigma in vals:
            for tau in vals:
                for gamma in (F(-1), F(0), F(1, 2), F(1), F(2)):
                    for theta, eta in ((0, 0), (F(1, 3), F(-1))):
                        try:
                            out.append(harness.QhParams(theta, eta, sigma, tau, gamma, chi))
                        except Exception:
                            continue
    return out


def _coeff_job(index: int) -> dict[str, Any]:
    p = param_grid()[index]
    rng = random.Random(SEED + 800 + index)
    times = [random_times(rng, 3, lo=F(1, 4)) for _ in range(3)]
    res = {"dual_path": True, "scale": True, "shift": True, "shift_c": True, "shift_gap": True, "F_chi": True, "expected_value": True}
    checked = 0
    has_generator = p.chi + p.tau > 0
    for r, s, u in times:
        if p.c(r, u) == 0:
            continue
        checked += 1
        direct = harness.variance_coeffs(p, r, s, u)
        for lam in (F(1, 3), F(2), F(7)):
            scaled = harness.conditional_variance_table(*(lam * v for v in p.raw()), r, s, u)
            res["scale"] &= scaled == direct
        if has_generator:
            g, _ = harness.params_to_generator(p)
            quad = harness.qh_regression_coeffs(g, r, s, u)
            res["dual_path"] &= harness.subtract_squared_mean(quad) == direct
            res["F_chi"] &= (quad.F != 0) == (p.chi == 1)
            res["expected_value"] &= quad.A * r + quad.B * r + quad.C * u + quad.F == s
            for lam in (F(1, 3), F(2), F(7)):
                g2 = harness.generator_from_raw(*(lam * v for v in p.raw()))
                res["scale"] &= harness.qh_regression_coeffs(g2, r, s, u) == quad
        for shift in (F(1, 2), F(1), F(2)):
            star = harness.shift_params(p, shift)
            rr, ss, uu = r + shift, s + shift, u + shift
            res["shift_c"] &= star.c(rr, uu) == p.c(r, u)
            if star.c(rr, uu) == 0:
                continue
            lhs = harness.conditional_variance_table(*star.raw(), rr, ss, uu)
            if has_generator:
                res["shift"] &= lhs.coeffs == harness.shifted_generator_table(p, shift, rr, ss, uu).coeffs
            base = harness.variance_coeffs(p, r, s, u)
            gap = base.F - lhs.F
            res["shift_gap"] &= lhs.coeffs[:5] == base.coeffs[:5] and gap == shift * p.sigma * (s - r) * (u - s) / p.c(r, u)
    return {"params": p.to_json(), "points": checked, **res}


def criterion_8(workers: int = 1) -> dict[str, Any]:
    grid = param_grid()
    results = _pmap(_coeff_job, list(range(len(grid))), workers)
    keys = ("dual_path", "scale", "shift", "shift_c", "shift_gap", "F_chi", "expected_value")
    summary = {k: all(r[k] for r in results) for k in keys}
    points = sum(r["points"] for r in results)
    return {
        "criterion": 8,
        "pass": all(summary.values()) and points >= 200,
        "grid_points": points,
        "parameter_sets": len(grid),
        "checks": summary,
        "failures": [r for r in results if not all(r[k] for k in keys)],
    }


# --------------------------------------------------------------------------
# 9. Monte Carlo


def variance_reduced_theory(p: harness.QhParams, r, s, u) -> list[Fraction]:
    """Coefficients on ``(X_rX_u, X_r, X_u, X_u^2)`` when ``X_r^2 = (r/u) X_u^2`` pathwise."""
    t = harness.variance_coeffs(p, r, s, u)
    return [t.B, t.D, t.E, t.C + t.A * F(r) / F(u)]


def monte_carlo_report(n_paths: int = 200_000, seed: int = MC_SEED, k: float = 3.0, workers: int = 1) -> dict[str, Any]:
    grid = (1, 2, 3, 4)
    ss = [int(x) for x in np.random.SeedSequence(seed).generate_state(4)]
    bm = lab.simulate(lab.SimConfig("brownian", grid, n_paths, ss[0]), workers)
    sign = lab.simulate(lab.SimConfig("sign_q_minus_1", grid, n_paths, ss[1]), workers)
    rad = lab.simulate(lab.SimConfig("scaled", grid, n_paths, ss[2], "rademacher"), workers)
    gau = lab.simulate(lab.SimConfig("scaled", grid, n_paths, ss[3], "gaussian"), workers)

    a = lab.mc_compare(lab.estimate_regression(bm, "linear", (1, 2, 4)), [F(2, 3), F(1, 3)], k)
    one = harness.second_moment_coeffs("bounded", 0, 0, 3, 1)
    b = lab.mc_compare(lab.estimate_regression(bm, "one_sided_quadratic", (1, 3)), [one.a_ts, one.b_ts, one.c_ts], k)
    covs = [lab.covariance_check(sign, s, t, k) for s, t in ((1, 2), (1, 4), (2, 3), (3, 4))]
    abs_ok = bool(all(np.allclose(abs(sign.column(t)), t**0.5, rtol=0, atol=1e-12) for t in grid))
    try:
        lab.estimate_regression(sign, "quadratic", (1, 2, 4))
        rank = {"rank_deficient": False}
    except RankDeficient as exc:
        rank = {"rank_deficient": True, "rank": exc.rank, "columns": exc.columns}
    tau1 = harness.QhParams(0, 0, 0, 1, 0, 0)
    theory = variance_reduced_theory(tau1, 1, 2, 4)
    est_r = lab.estimate_regression(rad, "variance_reduced", (1, 2, 4))
    est_g = lab.estimate_regression(gau, "variance_reduced", (1, 2, 4))
    d_r, d_g, d_pair = lab.mc_compare(est_r, theory, k), lab.mc_compare(est_g, theory, k), lab.mc_compare_pair(est_r, est_g, k)
    fourth = lab.fourth_moment_compare(rad, gau, 1, 10.0)
    squares = [lab.squared_harness_check(pm, 1, 2, 4) for pm in (rad, gau)]
    parts = {
        "a_brownian_linear": a.to_json(),
        "b_brownian_one_sided": b.to_json(),
        "c_sign_covariance": [c.to_json() for c in covs],
        "c_sign_abs_sqrt_t": abs_ok,
        "c_sign_quadratic": rank,
        "d_rademacher_vs_theory": d_r.to_json(),
        "d_gaussian_vs_theory": d_g.to_json(),
        "d_rademacher_vs_gaussian": d_pair.to_json(),
        "d_fourth_moment": fourth.to_json(),
        "d_squared_harness": [s.to_json() for s in squares],
    }
    ok = (
        a.passed
        and b.passed
        and all(c.passed for c in covs)
        and abs_ok
        and rank["rank_deficient"]
        and d_r.passed
        and d_g.passed
        and d_pair.passed
        and fourth.passed
        and all(s.passed for s in squares)
    )
    return {"check": "monte_carlo", "pass": bool(ok), "n_paths": n_paths, "seed": seed, "theory_variance_reduced": encode(theory), **parts}


def criterion_9(workers: int = 1) -> dict[str, Any]:
    return {"criterion": 9, **monte_carlo_report(workers=workers)}


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def report_bytes(report: dict[str, Any]) -> bytes:
    return (dumps(report) + "\n").encode("utf-8")


def run_all(workers: int = 1, which: Iterable[int] = tuple(CRITERIA)) -> dict[int, dict[str, Any]]:
    return {n: CRITERIA[n](workers) for n in which}
