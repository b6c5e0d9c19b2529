import csv
import io
import json
import math
from fractions import Fraction

import pytest

from mdlab.cli import main, parse_rho


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_rho():
    assert parse_rho("3") == 3 and isinstance(parse_rho("3"), int)
    assert parse_rho("1/10") == Fraction(1, 10)
    assert isinstance(parse_rho("0.1"), float) and isinstance(parse_rho("1e-1"), float)


def test_exact_z_poly(capsys):
    code, out, _ = run(capsys, "exact-z", "--region", "grid:2x2", "--rho", "1", "--poly")
    assert code == 0 and out == "0 1\n1 4\n2 2\n"


def test_exact_z_value(capsys):
    assert run(capsys, "exact-z", "--region", "path:3", "--rho", "2")[1] == "12\n"
    assert run(capsys, "exact-z", "--region", "path:3", "--rho", "1/2")[1] == "9/8\n"


def test_exact_corr(capsys):
    code, out, _ = run(capsys, "exact-corr", "--region", "path:3", "--A", "(0)", "--B", "(2)", "--rho", "1")
    assert code == 0 and out == "-1/9\n"
    code, out, _ = run(capsys, "exact-corr", "--region", "path:3", "--A", "(0)", "--B", "(2)", "--rho", "8",
                       "--format", "json")
    data = json.loads(out)
    assert data["value"] == "-1/278784" and data["method"] == "exact-rational" and data["abs_error"] == 0


def test_exact_rational_output_is_reduced(capsys):
    out = run(capsys, "dimer-cov", "--region", "grid:2x2", "--e1", "(0,0);(1,0)", "--e2", "(0,1);(1,1)",
              "--rho", "1")[1]
    p, q = (int(x) for x in out.strip().split("/"))
    assert (p, q) == (3, 49) and math.gcd(p, q) == 1 and q > 0


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds", "--dim", "2", "--asize", "1", "--dist", "3", "--rho", "12")
    rows = dict(csv.reader(io.StringIO(out)))
    assert float(rows["final"]) == pytest.approx(6.738e-3, rel=1e-3)
    assert rows["kp_holds"] == "true"


def test_cluster_logz_csv_roundtrip(capsys):
    out = run(capsys, "cluster-logz", "--region", "grid:2x2", "--rho", "10", "--order", "4")[1]
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["order"]) for r in rows] == [1, 2, 3, 4]
    assert float(rows[-1]["cumulative"]) == pytest.approx(math.log(1.0402), abs=1e-6)


def test_cluster_corr(capsys):
    code, out, err = run(capsys, "cluster-corr", "--region", "path:3", "--A", "(0)", "--B", "(2)", "--rho", "20",
                         "--order", "1")
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and float(row["value"]) == 0 and "below-min-order" in row["flags"]
    assert "warning" in err


def test_mcmc_corr_roundtrip_and_determinism(capsys):
    argv = ["mcmc-corr", "--region", "path:3", "--A", "(0)", "--B", "(2)", "--rho", "1", "--sweeps", "4000",
            "--seed", "17", "--chains", "2"]
    out1 = run(capsys, *argv)[1]
    out2 = run(capsys, *argv, "--workers", "2")[1]
    assert out1 == out2
    rows = list(csv.DictReader(io.StringIO(out1)))
    assert [r["quantity"] for r in rows] == ["P_AB", "P_A", "P_B", "U"]
    u = rows[-1]
    assert abs(float(u["mean"]) + 1 / 9) <= 3 * float(u["stderr"])


def test_decay_fit_from_file(tmp_path, capsys):
    f = tmp_path / "pts.csv"
    f.write_text("distance,value\n1,%r\n2,%r\n" % (math.exp(-2), math.exp(-4)))
    out = run(capsys, "decay-fit", "--input", str(f), "--rho", "1/2")[1]
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["rho"] == "1/2" and float(row["c"]) == pytest.approx(2) and int(row["points"]) == 2


def test_decay_fit_sweep(capsys):
    out = run(capsys, "decay-fit", "--region", "grid:2x10", "--A", "(0,1)", "--B", "(0,1)", "--shift", "(0,1)",
              "--steps", "2:7", "--rho", "2/5,1")[1]
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["rho", "c", "log_c_prime", "r2", "points"]
    assert [r["rho"] for r in rows] == ["2/5", "1"]


def test_double_connect(capsys):
    out = run(capsys, "double-connect", "--region", "path:3", "--rho", "1", "--e1", "(0);(1)", "--e2", "(1);(2)",
              "--exact")[1]
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["quantity"] == "connect[v1]" and float(row["mean"]) == pytest.approx(2 / 9)


def test_superpose_json(capsys):
    out = run(capsys, "superpose", "--region", "path:3", "--w1", "(0);(1)", "--w2", "(1);(2)")[1]
    assert json.loads(out) == {"open": [[[0], [1], [2]]], "closed": [], "isolated": []}


def test_out_file(tmp_path, capsys):
    dest = tmp_path / "z.txt"
    assert run(capsys, "exact-z", "--region", "grid:2x3", "--poly", "--out", str(dest))[1] == ""
    assert dest.read_text() == "0 1\n1 7\n2 11\n3 3\n"


@pytest.mark.parametrize("argv, code", [
    (["exact-corr", "--region", "path:3", "--A", "(0)", "--B", "(2)", "--rho", "0"], 3),
    (["exact-z", "--region", "grid:6x6", "--rho", "1"], 4),
    (["exact-z", "--region", "grid:2by2", "--rho", "1"], 2),
    (["exact-corr", "--region", "path:3", "--A", "(0)", "--B", "(0)", "--rho", "1"], 2),
    (["exact-z", "--region", "path:3", "--rho", "-1"], 2),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_workers_env_default(monkeypatch, capsys):
    monkeypatch.setenv("MDLAB_WORKERS", "2")
    from mdlab.montecarlo import default_workers
    assert default_workers() == 2
