"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 verification failed (verdict JSON
on stdout), 3 domain or invertibility error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from typing import Any, Sequence

from . import flows, harness, lab
from .affine import AffineAlgebra, AffineElem, OneWayFamily, one_way_flow, recover_one_way_generator, verify_one_way_flow
from .core import check_laws
from .endo import EndoPairDna
from .errors import NearflowError
from .jsonio import dumps, encode, load_arg
from .qh import QhDna
from .rational import fmt, q

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_DOMAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(message)


def parse_times(text: str, arity: int | None = None) -> list[tuple[Fraction, ...]]:
    """``"r,s,u;r,s,u"`` to a list of rational tuples."""
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            tup = tuple(q(v) for v in chunk.split(","))
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad time list {chunk!r}: {exc}") from None
        if arity is not None and len(tup) != arity:
            raise UsageError(f"expected {arity} times per group, got {chunk!r}")
        out.append(tup)
    if not out:
        raise UsageError("no times given")
    return out


def _json_arg(text: str | None, flag: str) -> Any:
    if text is None:
        raise UsageError(f"{flag} is required")
    try:
        return load_arg(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {flag}: {exc}") from None


def _algebra(args):
    if args.algebra == "affine":
        return AffineAlgebra(args.dim if args.dim is not None else 1)
    if args.algebra == "endo":
        return EndoPairDna(args.dim if args.dim is not None else 2)
    return QhDna()


def _element(alg, data):
    try:
        return alg.element_from_json(data)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed element JSON: {exc}") from None


def _emit(payload: Any) -> None:
    sys.stdout.write(dumps(payload) + "\n")


def _verdict_exit(payload: dict[str, Any], passed: bool) -> int:
    _emit(payload)
    return EXIT_OK if passed else EXIT_FAILED


# --------------------------------------------------------------------------
# commands


def cmd_laws_check(args) -> int:
    alg = _algebra(args)
    rng = random.Random(args.seed)
    samples = [alg.sample(rng) for _ in range(args.samples)]
    report = check_laws(alg, samples, max_triples=args.max_triples)
    return _verdict_exit({"algebra": alg.name, "samples": args.samples, **report.to_json()}, report.ok)


def cmd_flow_eval(args) -> int:
    alg = _algebra(args)
    h = _element(alg, _json_arg(args.generator, "--generator"))
    if isinstance(alg, AffineAlgebra):
        out = [{"s": s, "t": t, "x": one_way_flow(alg, h, s, t)} for s, t in parse_times(args.times, 2)]
    else:
        fam = flows.FlowFamily(alg, generator=h)
        out = [{"r": r, "s": s, "u": u, "x": fam(r, s, u)} for r, s, u in parse_times(args.times, 3)]
    _emit(out[0]["x"] if len(out) == 1 else out)
    return EXIT_OK


def cmd_flow_verify(args) -> int:
    alg = _algebra(args)
    h = _element(alg, _json_arg(args.generator, "--generator"))
    if isinstance(alg, AffineAlgebra):
        report = verify_one_way_flow(OneWayFamily(alg, generator=h), parse_times(args.times, 3))
        return _verdict_exit(report.to_json(), report.ok)
    fam = flows.FlowFamily(alg, generator=h)
    verdict = flows.verify_two_way_flow(fam, parse_times(args.quadruples, 4), args.s_probes, args.profile)
    return _verdict_exit(verdict.to_json(), verdict.ok)


def _triples_from(quads: Sequence[tuple[Fraction, ...]]) -> list[tuple[Fraction, ...]]:
    out: list[tuple[Fraction, ...]] = []
    for r, s, t, u in quads:
        for tr in ((r, s, t), (r, s, u), (r, t, u), (s, t, u)):
            if tr[0] > 0 and tr not in out:
                out.append(tr)
    return out


def cmd_gen_check(args) -> int:
    alg = _algebra(args)
    if isinstance(alg, AffineAlgebra):
        raise UsageError("gen-check needs a DNA (--algebra endo or qh)")
    h = _element(alg, _json_arg(args.generator, "--generator"))
    quads = parse_times(args.quadruples, 4) if args.quadruples else []
    triples = parse_times(args.times, 3) if args.times else _triples_from(quads)
    if not triples:
        raise UsageError("give --times or --quadruples with r > 0")
    gen = flows.is_flow_generator(alg, h, triples, args.u_probes)
    combined = flows.FlowVerdict()
    combined.merge(gen)
    if quads:
        combined.merge(flows.verify_two_way_flow(flows.FlowFamily(alg, generator=h), quads, args.s_probes))
    return _verdict_exit(combined.to_json(), combined.ok)


def cmd_gen_recover(args) -> int:
    alg = _algebra(args)
    ((t,),) = parse_times(args.t_probe, 1)
    if args.element is not None:
        x = _element(alg, _json_arg(args.element, "--element"))
        if isinstance(alg, AffineAlgebra):
            _emit(recover_one_way_generator(alg, x, t))
        else:
            fam = flows.FlowFamily(alg, table={(0, t, 1): x})
            _emit(flows.recover_generator(fam, t))
        return EXIT_OK
    h = _element(alg, _json_arg(args.generator, "--generator"))
    if isinstance(alg, AffineAlgebra):
        got = recover_one_way_generator(alg, one_way_flow(alg, h, 0, t), t)
    else:
        got = flows.recover_generator(flows.FlowFamily(alg, generator=h), t)
    return _verdict_exit({"check": "recover", "pass": got == h, "recovered": got, "t_probe": t}, got == h)


def _rows_out(rows: list[dict[str, Any]], columns: Sequence[str], fmt_: str) -> int:
    if fmt_ == "csv":
        import csv
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([encode(row[c]) for c in columns])
        sys.stdout.write(buf.getvalue())
    else:
        _emit(rows)
    return EXIT_OK


def _scalar_params(params: Any, keys: Sequence[str]) -> list[Fraction]:
    if not isinstance(params, dict):
        raise UsageError("--params must be a JSON object")
    try:
        return [q(str(params.get(k, "0"))) for k in keys]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad --params value: {exc}") from None


def cmd_harness_coeffs(args) -> int:
    params = _json_arg(args.params, "--params") if args.params else {}
    if not args.second_moment:
        alpha, rho = _scalar_params(params, ("alpha", "rho"))
        cols = ("r", "s", "u", "a", "b", "A_ru", "B_ru")
        rows = []
        for r, s, u in parse_times(args.times, 3):
            vals = harness.linear_harness_coeffs(args.kind, alpha, rho, r, s, u)
            rows.append(dict(zip(cols, (r, s, u, *vals))))
        return _rows_out(rows, cols, args.format)
    a, b = _scalar_params(params, ("a", "b"))
    cols = ("s", "t", "a_ts", "b_ts", "c_ts")
    rows = []
    for s, t in parse_times(args.times, 2):
        m = harness.second_moment_coeffs(args.kind, a, b, t, s)
        rows.append(dict(zip(cols, (s, t, m.a_ts, m.b_ts, m.c_ts))))
    return _rows_out(rows, cols, args.format)


def _table_rows(tables) -> list[dict[str, Any]]:
    return [dict(zip(harness.CSV_COLUMNS, (getattr(t, c) for c in harness.CSV_COLUMNS))) for t in tables]


def cmd_qh_coeffs(args) -> int:
    data = _json_arg(args.params, "--params")
    if "alpha" in data:
        g = harness.GeneratorParams6.from_json(data)
    else:
        g, _ = harness.params_to_generator(harness.QhParams.from_json(data))
    tables = [harness.qh_regression_coeffs(g, *t) for t in parse_times(args.times, 3)]
    return _rows_out(_table_rows(tables), harness.CSV_COLUMNS, args.format)


def cmd_variance_coeffs(args) -> int:
    p = harness.QhParams.from_json(_json_arg(args.params, "--params"))
    tables = [harness.variance_coeffs(p, *t) for t in parse_times(args.times, 3)]
    return _rows_out(_table_rows(tables), harness.CSV_COLUMNS, args.format)


def _sim_config(args) -> lab.SimConfig:
    grid = tuple(t[0] for t in parse_times(args.grid.replace(",", ";"), 1))
    return lab.SimConfig(args.process, grid, args.paths, args.seed, args.y_law)


def cmd_simulate(args) -> int:
    pm = lab.simulate(_sim_config(args), workers=args.workers)
    summary = {
        **pm.config.header(),
        "mean": [float(v) for v in pm.values.mean(axis=0)],
        "second_moment": [float(v) for v in (pm.values**2).mean(axis=0)],
    }
    if args.out:
        data_path, head_path = lab.export_paths(pm, args.out)
        summary["files"] = [str(data_path), str(head_path)]
    _emit(summary)
    return EXIT_OK


def cmd_mc_validate(args) -> int:
    from .acceptance import monte_carlo_report

    report = monte_carlo_report(n_paths=args.paths, seed=args.seed, k=args.k_sigma, workers=args.workers)
    return _verdict_exit(report, report["pass"])


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nearflow", description="Near algebras, two-way flows and harness coefficients.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        return sp

    def algebra_flags(sp):
        sp.add_argument("--algebra", choices=("affine", "endo", "qh"), required=True)
        sp.add_argument("--dim", type=int, default=None)

    sp = add("laws-check", cmd_laws_check, "check the near-algebra laws on random samples")
    algebra_flags(sp)
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-triples", type=int, default=None)

    sp = add("flow-eval", cmd_flow_eval, "evaluate a flow from a generator")
    algebra_flags(sp)
    sp.add_argument("--generator", required=True)
    sp.add_argument("--times", required=True, help="'r,s,u;...' (affine: 's,t;...')")

    sp = add("flow-verify", cmd_flow_verify, "verify the flow equations of a generated family")
    algebra_flags(sp)
    sp.add_argument("--generator", required=True)
    sp.add_argument("--quadruples", help="'r,s,t,u;...'")
    sp.add_argument("--times", help="affine only: 's,t,u;...'")
    sp.add_argument("--s-probes", type=int, default=5)
    sp.add_argument("--profile", choices=flows.PROFILES, default="full")

    sp = add("gen-check", cmd_gen_check, "test whether an element is a flow generator")
    algebra_flags(sp)
    sp.add_argument("--generator", required=True)
    sp.add_argument("--quadruples")
    sp.add_argument("--times")
    sp.add_argument("--u-probes", type=int, default=5)
    sp.add_argument("--s-probes", type=int, default=5)

    sp = add("gen-recover", cmd_gen_recover, "recover a generator from a flow element")
    algebra_flags(sp)
    sp.add_argument("--generator")
    sp.add_argument("--element", help="x_{t,0,1} (DNA) or x_{0,t} (affine)")
    sp.add_argument("--t-probe", default="1/2")

    sp = add("harness-coeffs", cmd_harness_coeffs, "linear harness or one-sided second-moment coefficients")
    sp.add_argument("--kind", choices=("bounded", "unbounded"), required=True)
    sp.add_argument("--params", help='{"alpha","rho"} or, with --second-moment, {"a","b"}')
    sp.add_argument("--times", required=True)
    sp.add_argument("--second-moment", action="store_true")
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    for name, func, help_ in (
        ("qh-coeffs", cmd_qh_coeffs, "quadratic-harness second-moment table"),
        ("variance-coeffs", cmd_variance_coeffs, "conditional variance table"),
    ):
        sp = add(name, func, help_)
        sp.add_argument("--params", required=True)
        sp.add_argument("--times", required=True)
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = add("simulate", cmd_simulate, "simulate paths and summarise them")
    sp.add_argument("--process", choices=lab.KINDS, required=True)
    sp.add_argument("--y-law", choices=lab.Y_LAWS)
    sp.add_argument("--grid", default="1,2,3,4")
    sp.add_argument("--paths", type=int, default=20000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out")

    sp = add("mc-validate", cmd_mc_validate, "Monte Carlo validation of the coefficient tables")
    sp.add_argument("--paths", type=int, default=200_000)
    sp.add_argument("--seed", type=int, default=2024)
    sp.add_argument("--k-sigma", type=float, default=3.0)
    sp.add_argument("--workers", type=int, default=1)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("missing command")
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (NearflowError, ZeroDivisionError) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
