import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest

from azpair.cli import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY,
    UsageError,
    main,
    parse_map,
    parse_point,
    parse_range,
)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def records(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


# --- parsing --------------------------------------------------------------

def test_parse_map_families():
    assert parse_map("family:squaring").is_squaring()
    assert parse_map("family:quad c=0").is_squaring()
    assert parse_map(["family:lattes", "a=1", "b=2"]).degree == 4
    assert parse_map("family:monomial d=3").degree == 3
    assert parse_map("num=[0,2,-1] den=[1]").lift == parse_map("family:coc alpha=1").lift
    assert parse_map("family:coc alpha=1/2")(0) == Fraction(1, 4)


@pytest.mark.parametrize(
    "text",
    ["family:nope", "family:quad", "family:lattes a=0 b=1", "num=[1] den=[0,1]", "num=[0,1]", "num=1,2 den=[1]", "c=1"],
)
def test_parse_map_errors(text):
    with pytest.raises(UsageError):
        parse_map(text)


def test_parse_point_and_range():
    assert str(parse_point("6/4")) == "3/2"
    assert parse_point("inf").is_infinity
    assert parse_range("3..6") == [3, 4, 5, 6]
    assert parse_range("4") == [4]
    for bad in ("0", "5..2", "a..b"):
        with pytest.raises(UsageError):
            parse_range(bad)
    with pytest.raises(UsageError):
        parse_point("1/0/3")


# --- commands -------------------------------------------------------------

def test_height_periodic(capsys):
    code, out, _ = run(capsys, "height", "--map", "family:quad", "c=-1", "--point", "0/1", "--format", "jsonl")
    rec = records(out)[0]
    assert code == EXIT_OK
    assert rec["value"] == 0.0
    assert {"value", "error_bound", "iterations", "method"} <= set(rec)


def test_height_squaring(capsys):
    code, out, _ = run(capsys, "height", "--map", "family:squaring", "--point", "2/1", "--format", "jsonl")
    assert code == EXIT_OK
    assert abs(records(out)[0]["value"] - math.log(2)) <= 1e-10


def test_height_explicit_map(capsys):
    code, out, _ = run(capsys, "height", "--map", "num=[0,2,-1]", "den=[1]", "--point", "3/1", "--format", "jsonl")
    assert code == EXIT_OK
    assert abs(records(out)[0]["value"] - math.log(2)) <= 1e-10


def test_pairing_diagonal_with_symmetry(capsys):
    code, out, _ = run(capsys, "pairing", "--phi", "family:squaring", "--psi", "family:squaring", "--n", "1..4", "--format", "jsonl")
    rec = records(out)[0]
    assert code == EXIT_OK
    assert abs(rec["value"]) <= 1e-12
    assert rec["k"] == 0  # forced for the squaring map
    assert "symmetry_gap" in rec and rec["method"] == "periodic-point estimator"
    assert len(rec["history"]) == 4


def test_pairing_two_directions(capsys):
    code, out, _ = run(
        capsys, "pairing", "--phi", "family:coc", "alpha=1", "--psi", "family:quad", "c=-1", "--n", "1..5", "--k", "n",
        "--format", "jsonl",
    )
    rec = records(out)[0]
    assert code == EXIT_OK
    assert rec["n"] == 5 and rec["k"] == 5
    assert rec["symmetry_gap"] == pytest.approx(abs(rec["value"] - rec["swapped_value"]))
    assert rec["symmetry_gap"] < 0.2


def test_pairing_no_symmetry(capsys):
    code, out, _ = run(capsys, "pairing", "--phi", "family:squaring", "--psi", "family:coc", "alpha=1", "--n", "2",
                       "--no-symmetry", "--format", "jsonl")
    assert code == EXIT_OK
    assert "symmetry_gap" not in records(out)[0]


def test_family_coc(capsys):
    code, out, _ = run(capsys, "family", "coc", "--alpha", "1", "--format", "jsonl")
    rec = records(out)[0]
    assert code == EXIT_OK
    assert abs(rec["value"] - 0.323067) <= 5e-6
    assert "error_bound" in rec and "method" in rec


def test_family_quad(capsys):
    code, out, _ = run(capsys, "family", "quad", "--c", "12", "--format", "jsonl")
    rec = records(out)[0]
    assert code == EXIT_OK
    assert rec["lower"] == pytest.approx(0.1438, abs=1e-4)
    assert rec["upper"] == pytest.approx(1.9356, abs=1e-4)


def test_mahler_lehmer(capsys):
    code, out, _ = run(capsys, "mahler", "--poly", "[1,1,0,-1,-1,-1,-1,-1,0,1,1]", "--format", "jsonl")
    assert code == EXIT_OK
    assert abs(records(out)[0]["value"] - 0.1623576) <= 1e-7


def test_mahler_rational_coefficients(capsys):
    code, out, _ = run(capsys, "mahler", "--poly", "[-1/2,1/4]", "--format", "jsonl")
    assert code == EXIT_OK
    # (x - 2)/4 has measure log 2 - log 4
    assert records(out)[0]["value"] == pytest.approx(-math.log(2), abs=1e-12)


def test_verify_sharpness(capsys):
    code, out, _ = run(capsys, "verify", "sharpness", "--format", "jsonl")
    recs = records(out)
    assert code == EXIT_OK
    assert recs[0]["margin"] == pytest.approx(0.3230659472, abs=1e-8)
    assert recs[-1]["summary"] and recs[-1]["all_pass"]


def test_verify_failure_exit(capsys):
    code, out, _ = run(capsys, "verify", "height-diff", "--map", "family:coc", "alpha=1", "--pairing", "-1", "--points", "5",
                       "--format", "jsonl")
    assert code == EXIT_VERIFY
    assert records(out)[-1]["all_pass"] is False


def test_table_format(capsys):
    code, out, _ = run(capsys, "family", "coc", "--alpha", "3")
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("alpha")  # keys are sorted
    assert any(line.startswith("value") for line in out.splitlines())


# --- exit codes -----------------------------------------------------------

@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["height", "--map", "family:quad", "--point", "1"],
        ["height", "--map", "family:squaring", "--point", "x/y"],
        ["pairing", "--phi", "family:squaring", "--psi", "family:squaring", "--n", "0"],
        ["pairing", "--phi", "family:squaring", "--psi", "family:squaring", "--k", "-2"],
        ["height", "--map", "family:squaring", "--point", "2", "--tol", "0"],
        ["mahler", "--poly", "[0,0]"],
        ["verify", "equivalence"],
        ["height", "--map", "family:squaring", "--point", "2", "--config", "/nonexistent.json"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE
    assert err


def test_numeric_failure(capsys):
    code, _, err = run(capsys, "pairing", "--phi", "family:squaring", "--psi", "family:squaring", "--n", "12", "--degree-cap", "100")
    assert code == EXIT_NUMERIC
    assert "numeric failure" in err


def test_height_numeric_failure(capsys):
    code, _, _ = run(capsys, "height", "--map", "family:quad", "c=5", "--point", "1/3", "--tol", "1e-300")
    assert code == EXIT_NUMERIC


# --- configuration and determinism ----------------------------------------

def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"format": "jsonl", "n": "1..3", "k": "1"}))
    code, out, _ = run(capsys, "pairing", "--phi", "family:coc", "alpha=2", "--psi", "family:quad", "c=-1", "--config", str(cfg))
    rec = records(out)[0]
    assert code == EXIT_OK
    assert rec["n"] == 3 and rec["k"] == 1


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"format": "jsonl", "n": "1..3"}))
    code, out, _ = run(capsys, "pairing", "--phi", "family:squaring", "--psi", "family:squaring", "--config", str(cfg), "--n", "2")
    assert code == EXIT_OK
    assert records(out)[0]["n"] == 2


def test_byte_identical_output(capsys):
    argv = ["verify", "families", "--points", "3", "--seed", "7", "--format", "jsonl"]
    code1, out1, _ = run(capsys, *argv)
    code2, out2, _ = run(capsys, *argv)
    assert code1 == code2 == EXIT_OK
    assert out1 == out2
    keys = [list(r) for r in records(out1)]
    assert all(k == sorted(k) for k in keys)


def test_module_entry_point():
    argv = [sys.executable, "-m", "azpair", "family", "coc", "--alpha", "1", "--format", "jsonl"]
    a = subprocess.run(argv, capture_output=True, check=False)
    b = subprocess.run(argv, capture_output=True, check=False)
    assert a.returncode == 0
    assert a.stdout == b.stdout
    assert abs(json.loads(a.stdout)["value"] - 0.323067) <= 5e-6
