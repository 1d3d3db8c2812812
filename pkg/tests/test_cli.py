import csv
import io
import json
from fractions import Fraction as F

import pytest

from nearflow import cli, flows
from nearflow.harness import GeneratorParams6
from nearflow.qh import QhDna, QhElem

COUNTER = '{"x":["1","1","0","0","0","0"],"u":["1","0"]}'
BROWNIAN = '{"theta":"0","eta":"0","sigma":"0","tau":"0","gamma":"1","chi":1}'


def call(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_flow_eval_from_file_matches_engine(capsys, tmp_path):
    g = GeneratorParams6(1, 0, 0, 0, 0, 1).element()
    path = tmp_path / "h.json"
    path.write_text(json.dumps(g.to_json()), encoding="utf-8")
    code, out, _ = call(capsys, "flow-eval", "--algebra", "qh", "--generator", f"@{path}", "--times", "1,2,4")
    assert code == 0
    got = QhElem.from_json(json.loads(out))
    assert got == flows.flow_element(QhDna(), g, 1, 2, 4)
    assert got == QhElem.of(F(6, 5), 0, F(1, 5), 0, 0, F(2, 5), F(2, 3), F(1, 3))


def test_flow_eval_several_times_returns_list(capsys):
    code, out, _ = call(capsys, "flow-eval", "--algebra", "endo", "--dim", "1", "--generator", '{"G":[["0"]],"H":[["0"]]}', "--times", "1,2,4;0,1,2")
    assert code == 0
    body = json.loads(out)
    assert [row["s"] for row in body] == ["2", "1"]


def test_affine_flow_eval(capsys):
    code, out, _ = call(capsys, "flow-eval", "--algebra", "affine", "--generator", '{"alpha":"1","vec":["1"]}', "--times", "1,2")
    assert code == 0
    assert json.loads(out) == {"alpha": "3/2", "vec": ["1/2"]}


def test_gen_check_counterexample_exits_2_with_witness(capsys):
    code, out, _ = call(capsys, "gen-check", "--algebra", "qh", "--generator", COUNTER, "--quadruples", "1,2,3,4")
    assert code == 2
    body = json.loads(out)
    assert body["pass"] is False
    failed = {r["check"]: r for r in body["results"] if not r["pass"]}
    assert "flow_eq_2" in failed
    wit = failed["flow_eq_2"]["witness"]
    assert [wit[k] for k in "rstu"] == ["1", "2", "3", "4"]
    assert wit["lhs"] != wit["rhs"]


def test_exit_2_witness_replays_through_flow_verify(capsys):
    _, out, _ = call(capsys, "gen-check", "--algebra", "qh", "--generator", COUNTER, "--quadruples", "1,2,3,4")
    wit = next(r["witness"] for r in json.loads(out)["results"] if r["check"] == "flow_eq_2")
    quad = ",".join(wit[k] for k in "rstu")
    code, out, _ = call(capsys, "flow-verify", "--algebra", "qh", "--generator", COUNTER, "--quadruples", quad)
    assert code == 2
    replay = next(r for r in json.loads(out)["results"] if r["check"] == "flow_eq_2")
    assert replay["pass"] is False
    assert replay["witness"] == wit


def test_flow_verify_minimal_profile_passes_counterexample(capsys):
    code, out, _ = call(capsys, "flow-verify", "--algebra", "qh", "--generator", COUNTER, "--quadruples", "1,2,3,4", "--profile", "minimal")
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_gen_check_valid_generator(capsys):
    g = json.dumps(GeneratorParams6(1, 0, F(1, 2), 1, 1, 1).element().to_json())
    code, out, _ = call(capsys, "gen-check", "--algebra", "qh", "--generator", g, "--quadruples", "1,2,3,4;1/2,1,3/2,2")
    assert code == 0, out


def test_variance_coeffs_csv(capsys):
    code, out, _ = call(capsys, "variance-coeffs", "--params", BROWNIAN, "--times", "1,2,4", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    row = rows[0]
    assert row["F"] == "2/3"
    assert all(row[c] == "0" for c in "ABCDE")
    assert "\r" not in out and out.endswith("\n")


def test_qh_coeffs_json_accepts_both_parametrisations(capsys):
    _, by_gen, _ = call(capsys, "qh-coeffs", "--params", '{"alpha":"1","rho":"0","beta":"0","h4":"0","h5":"0","h6":"1"}', "--times", "1,2,4")
    assert json.loads(by_gen)[0]["F"] == "2/5"


def test_harness_coeffs(capsys):
    code, out, _ = call(capsys, "harness-coeffs", "--kind", "bounded", "--params", '{"alpha":"0","rho":"0"}', "--times", "1,2,4", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0].startswith("r,s,u")


def test_second_moment_coeffs(capsys):
    code, out, _ = call(capsys, "harness-coeffs", "--kind", "bounded", "--second-moment", "--params", '{"a":"0","b":"0"}', "--times", "1,3")
    assert code == 0
    assert json.loads(out) == [{"s": "1", "t": "3", "a_ts": "1", "b_ts": "0", "c_ts": "2"}]


def test_laws_check(capsys):
    code, out, _ = call(capsys, "laws-check", "--algebra", "endo", "--dim", "2", "--samples", "4")
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_gen_recover(capsys):
    g = GeneratorParams6(2, 1, 1, 0, 1, 1).element()
    code, out, _ = call(capsys, "gen-recover", "--algebra", "qh", "--generator", json.dumps(g.to_json()), "--t-probe", "1/4")
    assert code == 0
    body = json.loads(out)
    assert body["pass"] is True and body["t_probe"] == "1/4"
    assert QhElem.from_json(body["recovered"]) == g
    x = flows.flow_element(QhDna(), g, 0, F(1, 2), 1)
    code, out, _ = call(capsys, "gen-recover", "--algebra", "qh", "--element", json.dumps(x.to_json()))
    assert code == 0
    assert QhElem.from_json(json.loads(out)) == g


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["no-such-command"],
        ["flow-eval", "--algebra", "qh"],
        ["flow-eval", "--algebra", "qh", "--generator", COUNTER, "--times", "1,2"],
        ["flow-eval", "--algebra", "qh", "--generator", COUNTER, "--times", "1,x,4"],
        ["flow-eval", "--algebra", "qh", "--generator", "{not json", "--times", "1,2,4"],
        ["flow-eval", "--algebra", "qh", "--generator", "@/nonexistent/h.json", "--times", "1,2,4"],
        ["gen-recover", "--algebra", "qh", "--generator", COUNTER, "--t-probe", "half"],
        ["harness-coeffs", "--kind", "bounded", "--params", '{"alpha":"one"}', "--times", "1,2,4"],
        ["flow-eval", "--algebra", "octonion", "--generator", COUNTER, "--times", "1,2,4"],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == 1
    assert out == ""
    assert err.startswith("usage error")


@pytest.mark.parametrize(
    "argv",
    [
        ["flow-eval", "--algebra", "qh", "--generator", COUNTER, "--times", "2,1,4"],
        ["flow-eval", "--algebra", "affine", "--generator", '{"alpha":"-1","vec":["0"]}', "--times", "1,2"],
        ["variance-coeffs", "--params", '{"theta":"0","eta":"0","sigma":"-1","tau":"0","gamma":"1","chi":1}', "--times", "1,2,4"],
        ["simulate", "--process", "brownian", "--paths", "10"],
    ],
)
def test_domain_errors_exit_3(capsys, argv):
    code, out, _ = call(capsys, *argv)
    assert code == 3
    assert "error" in json.loads(out)


def test_deterministic_output_is_byte_identical(capsys):
    argv = ["gen-check", "--algebra", "qh", "--generator", COUNTER, "--quadruples", "1,2,3,4;1/2,1,2,5"]
    first = call(capsys, *argv)
    assert call(capsys, *argv) == first
    sim = ["simulate", "--process", "scaled", "--y-law", "gaussian", "--paths", "2000", "--seed", "4"]
    one = call(capsys, *sim)
    assert call(capsys, *sim, "--workers", "3") == one


def test_simulate_writes_files(capsys, tmp_path):
    out_path = tmp_path / "paths.bin"
    code, out, _ = call(capsys, "simulate", "--process", "sign_q_minus_1", "--grid", "1/2,1,2", "--paths", "1000", "--out", str(out_path))
    assert code == 0
    body = json.loads(out)
    assert body["grid"] == [0.5, 1.0, 2.0]
    assert body["second_moment"] == pytest.approx([0.5, 1.0, 2.0], abs=1e-12)
    assert out_path.exists() and (tmp_path / "paths.bin.json").exists()


def test_mc_validate_small(capsys):
    code, out, _ = call(capsys, "mc-validate", "--paths", "20000", "--seed", "7")
    body = json.loads(out)
    assert code == (0 if body["pass"] else 2)
    assert body["c_sign_quadratic"]["rank_deficient"] is True
