import json
import subprocess
import sys

import pytest

from symred.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_all(capsys):
    code, out, err = run(["verify", "--all"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["seed"] == 0 and doc["policy"]["tol"] == 1e-9 and doc["policy"]["samples"] == 200
    assert doc["summary"]["reports"] == len(doc["reports"]) == 33
    assert "thm2.case4" in err


def test_verify_single_case(capsys):
    code, out, _ = run(["verify", "--case", "thm2.case5+"], capsys)
    doc = json.loads(out)
    assert code == 0 and [r["id"] for r in doc["reports"]] == ["thm2.case5+"]
    assert doc["reports"][0]["verdict"] == "pass"


def test_verify_unknown_case_is_a_warning(capsys):
    code, out, err = run(["verify", "--case", "nosuch"], capsys)
    assert code == 0 and json.loads(out)["reports"] == []
    assert "warning" in err


def test_verify_writes_report_file(tmp_path, capsys):
    path = tmp_path / "report.json"
    assert run(["verify", "--case", "tau0", "--out", str(path)], capsys)[0] == 0
    assert json.loads(path.read_text())["summary"]["reports"] == 8 + 4


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("SYMRED_SEED", "7")
    _, out, _ = run(["verify", "--case", "thm2.case4"], capsys)
    assert json.loads(out)["seed"] == 7
    _, out, _ = run(["verify", "--case", "thm2.case4", "--seed", "3"], capsys)
    assert json.loads(out)["seed"] == 3


def test_detsys_case4(capsys):
    code, out, _ = run(["detsys", "--tau", "1", "--k", "c*x^2", "--xi", "-1/x", "--eta", "0"], capsys)
    assert code == 0
    body = [line for line in out.splitlines() if line and not line.startswith("#")]
    assert [line.split()[-1] for line in body] == ["0"] * 4


def test_detsys_translation(capsys):
    _, out, _ = run(["detsys", "--tau", "1", "--k", "k(x)", "--xi", "1", "--eta", "0"], capsys)
    assert "k'(x)*u^2 - k'(x)*u^3" in out


def test_detsys_laurent_split(capsys):
    code, out, _ = run(["detsys", "--tau", "0", "--k", "2*B(x)^2", "--split", "0", "2"], capsys)
    assert code == 0 and "[laurent.u^2]" in out and "B'(x)" in out
    fixed = ["--coef", "2=B(x)", "--coef", "1=-tan(x)", "--coef", "0=0"]
    _, out, _ = run(["detsys", "--tau", "0", "--k", "2*B(x)^2", "--split", "0", "2"] + fixed, capsys)
    assert "B''(x)" in out and "tan(x)" in out


def test_detsys_parse_error(capsys):
    code, _, err = run(["detsys", "--tau", "1", "--k", "c*x^", "--xi", "1"], capsys)
    assert code == 3 and "error" in err


def test_unknown_flag_is_an_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify", "--bogus"])
    assert info.value.code == 2


def test_reduce_outputs_and_determinism(tmp_path, capsys):
    argv = ["reduce", "--case", "thm2.case4", "--c", "1", "--f0", "0.3", "--df0", "0", "--grid", "41x41"]
    assert run(argv + ["--out-dir", str(tmp_path / "a")], capsys)[0] == 0
    assert run(argv + ["--out-dir", str(tmp_path / "b")], capsys)[0] == 0
    for name in ("solution.csv", "stats.csv", "run.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    runinfo = json.loads((tmp_path / "a" / "run.json").read_text())
    assert runinfo["verdict"] == "pass" and runinfo["grid"] and runinfo["seed"] == 0
    assert (tmp_path / "a" / "solution.csv").read_text().startswith("t,x,u\n")
    assert (tmp_path / "a" / "stats.csv").read_text().startswith("level,h_t,h_x,linf,l2,order\n")


def test_reduce_negative_control_flags_fail(tmp_path, capsys):
    argv = ["reduce", "--case", "thm2.case4", "--f0", "0.3", "--df0", "0", "--no-ode", "--grid", "41x41",
            "--out-dir", str(tmp_path)]
    code, _, err = run(argv, capsys)
    assert code == 0 and "FAIL" in err
    assert json.loads((tmp_path / "run.json").read_text())["verdict"] == "FAIL"


def test_reduce_abort_exit_code(tmp_path, capsys):
    code, _, err = run(["reduce", "--case", "thm1.case3", "--grid", "21x21", "--out-dir", str(tmp_path)], capsys)
    assert code == 4 and "error" in err
    assert not (tmp_path / "run.json").exists()


def test_reduce_unknown_case(tmp_path, capsys):
    assert run(["reduce", "--case", "nosuch", "--out-dir", str(tmp_path)], capsys)[0] == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "symred", "verify", "--case", "thm1"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["summary"]["reports"] == 3


def test_verify_failure_exit_codes(capsys):
    # at tol 1e-15 rounding noise fails exact entries; the routes may then disagree
    code, out, err = run(["verify", "--case", "thm2", "--tol", "1e-15"], capsys)
    assert code == 1 and "tolerance-sensitive" in err
    assert json.loads(out)["summary"]["ok"] is False
    code, _, _ = run(["verify", "--tol", "1e-15"], capsys)
    assert code in (1, 2)
