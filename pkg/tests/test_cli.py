import json
import subprocess
import sys
from fractions import Fraction


from flatconn.cli import main
from flatconn.connection import horizontality_residuals
from flatconn.series import SeriesMatrix
from flatconn.formats import connection_from_literal, matrix_from_literal, vector_from_literal

from conftest import FIXTURES


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def record(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--output", "record")
    return code, json.loads(out)


def f(name):
    return FIXTURES / name


def test_check_flat(capsys):
    code, out, _ = run(capsys, "check-flat", f("zero_rank2.json"))
    assert code == 0 and out.startswith("FLAT")


def test_check_flat_witness(capsys):
    code, rec = record(capsys, "check-flat", f("not_flat_2var.json"))
    assert code == 1
    assert rec["flat"] is False
    assert rec["witness"] == {"pair": [1, 2], "entry": [1, 1], "exp": [0, 0], "coef": "1"}


def test_parse_error_exit_code(capsys):
    code, _, err = run(capsys, "check-flat", f("bad_zero_denominator.json"))
    assert code == 2
    assert "matrices[0][0][0].terms[0]" in err and "1/0" in err


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "check-flat", tmp_path / "nope.json")
    assert code == 2


def test_invalid_json_reports_line(capsys, tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"nvars": 1,\n "rank": }\n')
    code, _, err = run(capsys, "check-flat", p)
    assert code == 2 and "line 2" in err


def test_trivialize_rank_one(capsys):
    code, rec = record(capsys, "trivialize", f("rank1_lambda3.json"), "--prec", 4)
    assert code == 0
    assert rec["horizontal"] and rec["identity_mod_b"] and rec["conjugated_zero"]
    g = matrix_from_literal(rec["g"])
    assert [g[0, 0][k] for k in range(5)] == [1, -3, Fraction(9, 2), Fraction(-9, 2), Fraction(27, 8)]


def test_trivialize_zero(capsys):
    code, rec = record(capsys, "trivialize", f("zero_rank2.json"))
    assert code == 0
    assert matrix_from_literal(rec["g"]) == SeriesMatrix.identity(2, 1, 10)


def test_trivialize_two_variables(capsys):
    code, rec = record(capsys, "trivialize", f("flat_2var.json"), "--prec", 6)
    g = matrix_from_literal(rec["g"])
    assert dict(g[0, 0].items()) == {
        (0, 0): 1, (1, 1): -1, (2, 2): Fraction(1, 2), (3, 3): Fraction(-1, 6)}


def test_trivialize_non_flat(capsys):
    code, rec = record(capsys, "trivialize", f("not_flat_2var.json"))
    assert code == 1 and "witness" in rec


def test_trivialize_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "trivialize", f("bjork.json"), "--output", "record")
    path = tmp_path / "out.json"
    path.write_text(out)
    rec = json.loads(path.read_text())
    c = connection_from_literal(json.loads(f("bjork.json").read_text()))
    g = matrix_from_literal(rec["g"])
    assert all(r.is_zero() for r in horizontality_residuals(c, g))


def test_output_is_deterministic(capsys):
    outs = {run(capsys, "trivialize", f("bjork.json"), "--output", "record")[1] for _ in range(3)}
    assert len(outs) == 1


def test_psi_and_single_variable(capsys):
    code, rec = record(capsys, "psi", f("rank1_lambda3.json"), f("element_one.json"), "--prec", 4)
    assert code == 0 and rec["horizontal"]
    code, _, err = run(capsys, "psi", f("zero_2var.json"), f("element_one.json"), "--var", 1)
    assert code == 2 and "nvars" in err
    code, rec = record(capsys, "psi", f("bjork.json"), f("element_rank2.json"), "--var", 1)
    assert code == 0 and rec["var"] == 1 and rec["horizontal"]


def test_decompose(capsys):
    code, rec = record(capsys, "decompose", f("zero_rank2.json"), f("element_rank2.json"))
    assert code == 0 and rec["reconstructs"] and rec["maximal_in_ideal"]
    h = vector_from_literal(rec["horizontal"])
    assert [s.constant() for s in h] == [1, 0]


def test_decompose_one_plus_t(capsys):
    code, rec = record(capsys, "decompose", f("rank1_lambda3.json"), f("element_1_plus_t.json"))
    assert code == 0 and rec["reconstructs"]


def test_ode_solve_methods(capsys):
    code, rec = record(capsys, "ode-solve", f("zero_rank2.json"), "--method", "riemann:3")
    assert code == 0 and rec["residual_zero"]
    _, rec_r = record(capsys, "ode-solve", f("rank1_lambda3.json"), "--method", "recursion")
    _, rec_e = record(capsys, "ode-solve", f("rank1_lambda3.json"), "--method", "exp")
    assert rec_r["g"] == rec_e["g"]
    _, rec_k = record(capsys, "ode-solve", f("rank1_lambda3.json"), "--method", "riemann:16")
    g = matrix_from_literal(rec_k["g"])
    assert g[0, 0][2] == Fraction(9 * 15, 32)


def test_ode_solve_bad_method(capsys):
    code, _, err = run(capsys, "ode-solve", f("rank1_lambda3.json"), "--method", "euler")
    assert code == 2 and "invalid method" in err


def test_ode_solve_rejects_two_variables(capsys):
    code, _, _ = run(capsys, "ode-solve", f("flat_2var.json"))
    assert code == 2


def test_bjork_demo(capsys):
    code, rec = record(capsys, "bjork-demo", "--prec", 6)
    assert code == 0
    assert rec["residual_exp_lowest"] == {"degree": 2, "entry": [1, 2], "exp": [2], "coef": "1/2"}
    assert rec["residual_recursion_zero"] is True
    assert rec["commuting"] is False


def test_tower_check(capsys):
    code, rec = record(capsys, "tower-check", f("tower_t3.json"), "--order", 3)
    assert code == 0 and rec["coherent"] and rec["in_ideal_power"]
    code, rec = record(capsys, "tower-check", f("tower_geometric.json"), "--order", 1)
    assert code == 1 and rec["in_ideal_power"] is False


def test_self_test(capsys):
    code, rec = record(capsys, "self-test", "--seed", 5, "--count", 5)
    assert code == 0 and rec["failures"] == []


def test_prec_cap_validation(capsys):
    code, _, err = run(capsys, "check-flat", f("zero_rank2.json"), "--prec", 1)
    assert code == 2


def test_prec_env_override(capsys, monkeypatch):
    monkeypatch.setenv("FLATCONN_PREC", "3")
    _, rec = record(capsys, "check-flat", f("zero_rank2.json"))
    assert rec["prec"] == 3


def test_global_flags_before_subcommand(capsys):
    code = main(["--output", "record", "--prec", "3", "check-flat", str(f("zero_rank2.json"))])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["prec"] == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "flatconn", "bjork-demo", "--prec", "4"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "coefficient 1/2" in proc.stdout
