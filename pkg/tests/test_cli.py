import json
import subprocess
import sys

from djet.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_delta_examples(capsys):
    code, out, _ = run(capsys, "delta", "--primes", "2,3", "--prime", "2", "--expr", "x^2")
    assert code == 0 and out.strip() == "2*x^2*x@(1,0) + 2*x@(1,0)^2"
    code, out, _ = run(capsys, "delta", "--primes", "2,3", "--prime", "2", "--expr", "1")
    assert out.strip() == "0"
    code, _, err = run(capsys, "delta", "--primes", "2,3", "--prime", "2", "--expr", "x^^2")
    assert code == 2 and "error" in err


def test_delta_arithmetic_error(capsys):
    code, _, _ = run(capsys, "delta", "--primes", "2", "--prime", "2", "--expr", "1/2")
    assert code == 3


def test_phi(capsys):
    code, out, _ = run(capsys, "delta", "--primes", "3", "--prime", "3", "--expr", "T", "--phi")
    assert out.strip() == "T^3 + 3*T@(1)"


def test_jet_ring(capsys):
    code, out, _ = run(capsys, "jet-ring", "--primes", "2", "--order", "1", "--scheme", "A1", "--out", "json")
    d = json.loads(out)
    assert d["vars"] == ["x", "x@(1)"] and d["relations"] == []
    code, out, _ = run(capsys, "jet-ring", "--primes", "2,3", "--order", "1,1", "--scheme", "gm", "--out", "json")
    assert json.loads(out)["localizer"]
    code, out, _ = run(capsys, "jet-ring", "--primes", "3", "--order", "1", "--scheme", "xy", "--out", "json")
    assert len(json.loads(out)["relations"]) == 2


def test_witt(capsys):
    code, out, _ = run(capsys, "witt", "laws", "--prime", "2", "--length", "1", "--out", "json")
    d = json.loads(out)
    assert d["integral"] and d["S"][1] == "-X0*Y0 + X1 + Y1"
    code, out, _ = run(capsys, "witt", "adjunction", "--prime", "3", "--length", "1", "--mod", "9", "--scheme", "xy")
    assert code == 0


def test_laplacian(capsys):
    code, out, _ = run(capsys, "laplacian", "gm", "--primes", "3,5", "--prec", "8", "--deg", "12", "--out", "json")
    d = json.loads(out)
    assert code == 0 and all(r["status"] == "verified" for r in d["reports"])
    code, out, _ = run(capsys, "laplacian", "ec", "--a", "1", "--b", "1", "--primes", "5", "--prec", "6", "--deg", "10",
                       "--out", "json")
    d = json.loads(out)
    assert code == 0 and d["traces"]["5"] == -3
    assert any(r["identity"] == "df_k=omega_2e" and r["status"] == "verified" for r in d["reports"])
    code, _, _ = run(capsys, "laplacian", "ec", "--primes", "2,3")
    assert code == 2


def test_period(capsys):
    cyc = {"points": [{"prime": 3, "base_x": "1"}, {"prime": 3, "base_x": "-1"}, {"prime": 5, "base_x": "-1"},
                      {"prime": 5, "base_x": "1"}, {"prime": 3, "base_x": "1"}]}
    code, out, _ = run(capsys, "period", "--chain", json.dumps(cyc), "--out", "json")
    assert json.loads(out)["reduced"] == "zero_within_bound"
    cyc["points"][1]["base_x"] = cyc["points"][2]["base_x"] = "2"
    code, out, _ = run(capsys, "period", "--chain", json.dumps(cyc), "--out", "json")
    assert json.loads(out)["reduced"] == "nonzero_at_precision"
    code, _, _ = run(capsys, "period", "--chain", "{not json")
    assert code == 2


def test_verify_filter_and_determinism(capsys):
    code, out1, _ = run(capsys, "verify", "--only", "witt", "--seed", "7", "--out", "json")
    code2, out2, _ = run(capsys, "verify", "--only", "witt", "--seed", "7", "--out", "json")
    assert code == code2 == 0 and out1 == out2
    assert [s["suite"] for s in json.loads(out1)["suites"]] == ["witt"]
    code, _, _ = run(capsys, "verify", "--only", "nope")
    assert code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "djet", "delta", "--primes", "2", "--prime", "2", "--expr", "x"],
                       capture_output=True, text=True, check=True)
    assert r.stdout.strip() == "x@(1)"
